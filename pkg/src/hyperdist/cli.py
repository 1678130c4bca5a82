"""Command-line front end: `hyperdist <command> --expr ... --box ...`.

Exit codes: 0 success, 1 usage or parse error, 2 failed verification.
Reports are JSON with a fixed schema version; `--csv` writes plot data with
columns omega, probe_id, value, ratio, slope.
"""

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from .config import ConfigError, load_config
from .exprlang import EvalContext, ExprError, NetFunction, evaluate
from .netmodel import OmegaGrid, classify_growth, sup_profile
from .pairing import (
    build_test_function,
    dprime_close,
    estimate_distributional_order,
    estimate_s_order,
    fin_battery,
    is_s_distribution,
    pair,
    unrestricted_battery,
)
from .quadrature import CompactBox, QuadratureError
from .structure import (
    Decomposition,
    StructureError,
    local_structure,
    point_value,
    verify_decomposition,
    zero_local_structure,
)

SCHEMA = 1
CSV_COLUMNS = ("omega", "probe_id", "value", "ratio", "slope")
COMMANDS = ("eval", "pair", "classify", "order", "dorder", "decompose", "zero-decompose",
            "pointvalue", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad {what} {text!r}") from None


def parse_box(text):
    """'a1,b1;a2,b2' -> CompactBox."""
    intervals = []
    for part in text.split(";"):
        ab = _floats(part, "box interval")
        if len(ab) != 2:
            raise UsageError(f"box interval {part!r} needs two numbers")
        intervals.append(tuple(ab))
    try:
        return CompactBox.from_intervals(intervals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_domain(text):
    out = []
    for part in text.split(";"):
        ab = _floats(part, "domain interval")
        if len(ab) != 2 or not ab[0] < ab[1]:
            raise UsageError(f"bad domain interval {part!r}")
        out.append(tuple(ab))
    return tuple(out)


def default_domain(K):
    """Open box with the same center and twice the half-widths of K."""
    return tuple((c - L, c + L) for c, L in zip(K.center, K.lengths))


def _clean(obj):
    """Make a report strict JSON: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def build_parser():
    parser = _Parser(prog="hyperdist", description="Analyse omega-nets as distributions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file of 'section.key = value' lines")
        p.add_argument("--out", help="JSON report path (default: standard output)")
        p.add_argument("--csv", help="CSV plot data path")
        p.add_argument("--omega-grid", help="omega grid 'start:stop:xR', e.g. 16:4096:x2")
        if name == "verify":
            p.add_argument("--in", dest="inp", required=True, help="decomposition JSON")
            continue
        p.add_argument("--expr", required=name != "classify", help="omega-net expression")
        p.add_argument("--dim", type=int, default=1)
        p.add_argument("--box", help="compact box 'a1,b1;a2,b2' (default: middle of domain)")
        p.add_argument("--domain", help="open domain 'a1,b1;...' (default: box doubled)")
        if name in ("eval", "pointvalue", "classify"):
            p.add_argument("--point", help="point 'x1,x2,...'")
        if name == "eval":
            p.add_argument("--omega", type=float, help="single omega (default: the grid)")
        if name == "pair":
            p.add_argument("--probe", help="test function spec as JSON (default: fin battery)")
            p.add_argument("--against", help="second expression: check D'-closeness")
        if name == "classify":
            p.add_argument("--samples", help="'omega:value,omega:value,...' to classify")
        if name == "pointvalue":
            p.add_argument("--radius", type=float, default=0.1)
    return parser


class _Run:
    """Resolved inputs shared by the subcommands."""

    def __init__(self, args):
        self.args = args
        self.config = load_config(args.config)
        self.cfg = self.config.quad
        self.netcfg = self.config.net
        self.dim = getattr(args, "dim", 1)
        if self.dim < 1:
            raise UsageError("--dim must be >= 1")
        if args.omega_grid:
            try:
                self.grid = OmegaGrid.parse(args.omega_grid)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        else:
            self.grid = self.config.grid(self.dim)
        self.K = parse_box(args.box) if getattr(args, "box", None) else None
        if getattr(args, "domain", None):
            self.domain = parse_domain(args.domain)
        elif self.K is not None:
            self.domain = default_domain(self.K)
        else:
            self.domain = ((-2.0, 2.0),) * self.dim
        if len(self.domain) != self.dim:
            raise UsageError("--domain does not match --dim")
        if self.K is None:
            self.K = CompactBox.from_intervals([(a + 0.25 * (b - a), b - 0.25 * (b - a))
                                                for a, b in self.domain])
        if self.K.dim != self.dim:
            raise UsageError("--box does not match --dim")
        if not self.K.inside(self.domain, strict=False):
            raise UsageError("--box must lie inside --domain")
        self.f = NetFunction.parse(args.expr, self.domain) if getattr(args, "expr", None) else None

    def point(self):
        if not self.args.point:
            raise UsageError("--point is required")
        p = _floats(self.args.point, "point")
        if len(p) != self.dim:
            raise UsageError("--point does not match --dim")
        return tuple(p)

    def header(self):
        return {
            "expr": self.args.expr,
            "dim": self.dim,
            "box": self.K.to_list(),
            "domain": [list(ab) for ab in self.domain],
            "grid": self.grid.spec(),
            "config": self.config.to_dict(),
        }


def _cmd_eval(run):
    a = run.point()
    if not run.f.contains(a):
        raise UsageError("--point must lie in the domain")
    ctx = EvalContext(run.cfg, run.f.domain)
    omegas = [run.args.omega] if run.args.omega is not None else list(run.grid)
    values = [(w, float(evaluate(run.f.expr, np.array([a]), w, ctx)[0])) for w in omegas]
    rows = [(w, "point", v, "", "") for w, v in values]
    return {"point": list(a), "values": [list(v) for v in values]}, rows


def _cmd_pair(run):
    args = run.args
    if args.probe:
        try:
            spec = json.loads(args.probe)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--probe is not JSON: {exc}") from None
        phi = build_test_function(spec, run.domain)
        res = pair(run.f, phi, run.grid, run.cfg, run.netcfg)
        rows = [(w, res.probe_id, v, "", res.growth.p) for w, v in res.samples]
        return {"probe": phi.to_dict(), "result": res.to_dict()}, rows
    battery = fin_battery(run.K, run.domain, run.grid.omega0)
    if args.against:
        g = NetFunction.parse(args.against, run.domain)
        rep = dprime_close(run.f, g, battery, run.grid, run.cfg, run.netcfg)
        return {"against": args.against, "dprime_close": rep.to_dict()}, rep.csv_rows()
    rep = is_s_distribution(run.f, battery, run.grid, run.cfg, run.netcfg)
    return {"s_distribution": rep.to_dict()}, rep.csv_rows()


def _parse_samples(text):
    out = []
    for part in text.split(","):
        try:
            w, v = part.split(":")
            out.append((float(w), float(v)))
        except ValueError:
            raise UsageError(f"bad sample {part!r}, expected omega:value") from None
    return out


def _cmd_classify(run):
    args, net = run.args, run.netcfg
    if args.samples:
        samples, source = _parse_samples(args.samples), "samples"
        try:
            growth = classify_growth(samples, net.tau, net.abs_bound)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif run.f is None:
        raise UsageError("classify needs --expr or --samples")
    elif args.point:
        a = run.point()
        if not run.f.contains(a):
            raise UsageError("--point must lie in the domain")
        ctx = EvalContext(run.cfg, run.f.domain)
        samples = [(w, float(evaluate(run.f.expr, np.array([a]), w, ctx)[0])) for w in run.grid]
        source = "point"
        growth = classify_growth(samples, net.tau, net.abs_bound)
    else:
        growth, samples = sup_profile(run.f, run.K, run.grid, run.cfg, net=net)
        source = "sup_box"
    rows = [(w, source, v, "", growth.p) for w, v in samples]
    return {"source": source, "class": growth.to_dict()}, rows


def _cmd_order(run):
    battery = unrestricted_battery(run.K, run.domain, run.grid.omega0)
    est = estimate_s_order(run.f, run.K, battery, run.grid, run.config.battery.m_max,
                           run.cfg, run.netcfg)
    return est.to_dict(), est.csv_rows()


def _cmd_dorder(run):
    battery = fin_battery(run.K, run.domain, run.grid.omega0)
    est = estimate_distributional_order(run.f, run.K, battery, run.grid,
                                        run.config.battery.m_max, run.cfg, run.netcfg)
    return est.to_dict(), est.csv_rows()


def _decomposition_rows(report):
    sup = report.get("sup", {})
    rows = [(w, "sup_g", v, "", sup.get("p", "")) for w, v in sup.get("samples", [])]
    for probe_id, w, lv, rv, err in report.get("pairing", []):
        rows.append((w, probe_id, lv, rv, ""))
    return rows


def _decompose(run, builder):
    dec = builder(run.f, run.K, run.grid, run.cfg, run.netcfg)
    return dec.to_dict(), _decomposition_rows(dec.report), dec.passed


def _cmd_decompose(run):
    return _decompose(run, local_structure)


def _cmd_zero_decompose(run):
    return _decompose(run, zero_local_structure)


def _cmd_pointvalue(run):
    a = run.point()
    growth = point_value(run.f, a, run.grid, run.args.radius, run.cfg, run.netcfg)
    rows = [(w, "point", v, "", growth.p) for w, v in growth.samples]
    return {"point": list(a), "standard_part": growth.standard_part,
            "class": growth.to_dict()}, rows


def _booleans(report, prefix=""):
    out = {}
    for k, v in report.items():
        if isinstance(v, bool):
            out[prefix + k] = v
        elif isinstance(v, dict):
            out.update(_booleans(v, f"{prefix}{k}."))
    return out


def _cmd_verify(run):
    try:
        with open(run.args.inp, encoding="utf-8") as fh:
            data = json.load(fh)
        payload = data.get("report", data)
        dec = Decomposition.from_dict(payload)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read decomposition: {exc}") from None
    grid = dec.grid
    if run.args.omega_grid:
        grid = run.grid
    fresh = verify_decomposition(dec.f, dec.g, dec.alpha, dec.K, dec.mode, grid,
                                 run.cfg, run.netcfg)
    old, new = _booleans(dec.report), _booleans(fresh)
    shared = sorted(set(old) & set(new))
    mismatches = [k for k in shared if old[k] != new[k]]
    report = {"alpha": list(dec.alpha), "mode": dec.mode, "grid": grid.spec(),
              "fresh": fresh, "compared": shared, "mismatches": mismatches,
              "reproduced": not mismatches, "passed": bool(fresh.get("passed", False))}
    ok = report["reproduced"] and report["passed"]
    return report, _decomposition_rows(fresh), ok


HANDLERS = {
    "eval": _cmd_eval,
    "pair": _cmd_pair,
    "classify": _cmd_classify,
    "order": _cmd_order,
    "dorder": _cmd_dorder,
    "decompose": _cmd_decompose,
    "zero-decompose": _cmd_zero_decompose,
    "pointvalue": _cmd_pointvalue,
    "verify": _cmd_verify,
}


def _write(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(["" if v is None else v for v in _clean(list(row))])


VALUE_FLAGS = ("--box", "--domain", "--point", "--samples", "--expr", "--against", "--omega")


def _attach_values(argv):
    """Glue values such as '-1,1' to their flag so they are not read as options."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def run(argv=None):
    """Run one command; returns the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_attach_values(argv))
        if args.command == "verify":
            args.dim = 1
        state = _Run(args)
        result = HANDLERS[args.command](state)
        report, rows = result[0], result[1]
        ok = result[2] if len(result) > 2 else True
    except (UsageError, ConfigError, ExprError) as exc:
        print(f"hyperdist: error: {exc}", file=sys.stderr)
        return 1
    except StructureError as exc:
        print(f"hyperdist: verification failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, QuadratureError, NotImplementedError) as exc:
        print(f"hyperdist: error: {exc}", file=sys.stderr)
        return 1

    doc = {"schema": SCHEMA, "command": args.command,
           "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    if args.command != "verify":
        doc.update(state.header())
    else:
        doc["input"] = args.inp
    doc["report"] = report
    _write(args.out, json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")
    if args.csv:
        _write_csv(args.csv, rows)
    if not ok:
        print("hyperdist: verification failed: decomposition invariants violated",
              file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
