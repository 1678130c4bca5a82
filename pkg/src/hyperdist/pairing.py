"""Test functions, probe batteries, pairings and order estimators.

A finite battery of probes stands in for the space of all test functions,
so every verdict here is relative to the battery used; reports say so.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .exprlang import (
    OMEGA,
    EvalContext,
    NetFunction,
    add,
    bump,
    derivative,
    div,
    evaluate,
    mul,
    sin,
    sub,
    x,
)
from .exprlang.nodes import Antideriv, Integral, as_expr
from .netmodel import NetConfig, OmegaGrid, classify_growth
from .quadrature import CompactBox, QuadratureConfig
from .quadrature.ops import derivative_sup, integrate_box_detailed

EPS = np.finfo(float).eps
C0_LADDER = (1.0, 10.0, 100.0, 1000.0)
M_MAX = 6
FIN_CHECK_ORDER = 8
# omega-dependent probes size their support boxes for every omega >= this
OMEGA_MIN = 16.0

BATTERY_CAVEAT = (
    "verdicts quantify over the listed probes only; a finite battery cannot "
    "exhaust all test functions")
ORDER_CAVEAT = (
    "m is the smallest order whose ratios stay bounded on the omega grid; "
    "no finite grid can certify a bound for every infinite omega")


@lru_cache(maxsize=None)
def bump_integral():
    """Integral of bump over [-1, 1] (adaptive quadrature, ~1e-15 accurate)."""
    val, _ = integrate.quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1.0, 1.0,
                            epsabs=1e-14, epsrel=1e-14, limit=200)
    return val


class TestFunction:
    """Compactly supported probe, possibly omega-dependent, or an indicator."""

    __test__ = False  # keep pytest from collecting this class
    KINDS = ("standard", "omega_dependent", "indicator")

    def __init__(self, expr, support, kind="standard", probe_id="", integral=None,
                 verify=True, omega_min=OMEGA_MIN):
        if kind not in self.KINDS:
            raise ValueError(f"unknown test function kind {kind!r}")
        self.expr = as_expr(expr)
        self.support = support
        self.kind = kind
        self.probe_id = probe_id
        self.integral = integral
        if kind != "indicator" and self.expr.has_omega and kind == "standard":
            self.kind = "omega_dependent"
        if self.expr.free and max(self.expr.free) > support.dim:
            raise ValueError("test function uses coordinates beyond its support box")
        if verify and self.kind != "indicator":
            self._verify_support(omega_min)

    @property
    def dim(self):
        return self.support.dim

    def _verify_support(self, omega_min):
        """Check the expression vanishes on (and just outside) the support boundary."""
        pts = _boundary_points(self.support)
        omegas = (omega_min, 4096.0) if self.expr.has_omega else (1.0,)
        for w in omegas:
            vals = evaluate(self.expr, pts, w)
            if np.any(vals != 0.0):
                raise ValueError(
                    f"test function {self.probe_id or self.expr!r} does not vanish "
                    f"on the boundary of its support (omega={w:g})")

    def derivative(self, axis, probe_id=None):
        if self.kind == "indicator":
            raise ValueError("indicator probes are not differentiated")
        return TestFunction(derivative(self.expr, axis), self.support, self.kind,
                            probe_id or f"d{axis}({self.probe_id})", verify=False)

    def __call__(self, points, omega):
        if self.kind == "indicator":
            X = np.atleast_2d(np.asarray(points, dtype=float))
            inside = np.all((X >= self.support.lows) & (X <= self.support.highs), axis=1)
            return inside.astype(float)
        return evaluate(self.expr, points, omega)

    def to_dict(self):
        from .exprlang import serialize
        return {
            "probe_id": self.probe_id,
            "kind": self.kind,
            "support": self.support.to_list(),
            "expr": serialize(self.expr),
            "integral": self.integral,
        }

    def __repr__(self):
        return f"TestFunction({self.probe_id!r}, kind={self.kind!r})"


def _boundary_points(K, per_axis=9):
    out = []
    for axis in range(K.dim):
        for edge in (K.lows[axis], K.highs[axis]):
            for push in (0.0, 1e-9 * (K.highs[axis] - K.lows[axis])):
                val = edge - push if edge == K.lows[axis] else edge + push
                face = [np.linspace(a, b, per_axis) for a, b in K.intervals]
                face[axis] = np.array([val])
                mesh = np.meshgrid(*face, indexing="ij")
                out.append(np.stack([m.ravel() for m in mesh], axis=1))
    return np.concatenate(out)


def _vec(v, n):
    if np.isscalar(v):
        return (float(v),) * n
    v = tuple(float(t) for t in v)
    if len(v) != n:
        raise ValueError("per-axis parameters must match the dimension")
    return v


def _check_domain(K, domain):
    if domain is not None and not K.inside(domain, strict=False):
        raise ValueError("test function support leaves the ambient domain")


def bump_function(center, radius, normalize=False, dim=None, probe_id="", domain=None,
                  shift=None, stretch=None, omega_min=OMEGA_MIN):
    """Tensor bump prod_i bump((x_i - c_i) / r_i), optionally with integral 1.

    `shift` (an Expr per axis or one Expr) moves the center and `stretch` (an
    Expr) multiplies every radius; both may depend on omega, in which case
    the support box covers every omega >= omega_min.
    """
    n = dim or (1 if np.isscalar(center) else len(center))
    c, r = _vec(center, n), _vec(radius, n)
    if any(t <= 0 for t in r):
        raise ValueError("radius must be positive")
    expr = None
    pad = [0.0] * n
    for i in range(n):
        arg = sub(x(i + 1), c[i])
        if shift is not None:
            s = shift[i] if isinstance(shift, (list, tuple)) else shift
            arg = sub(arg, s)
            pad[i] += _omega_bound(s, omega_min)
        scale = as_expr(r[i])
        if stretch is not None:
            scale = mul(scale, stretch)
            pad[i] += r[i] * max(0.0, _omega_bound(stretch, omega_min) - 1.0)
        factor = bump(div(arg, scale))
        expr = factor if expr is None else mul(expr, factor)
    support = CompactBox(tuple(ci - ri - p for ci, ri, p in zip(c, r, pad)),
                         tuple(ci + ri + p for ci, ri, p in zip(c, r, pad)))
    _check_domain(support, domain)
    integral = None
    if normalize:
        if shift is not None or stretch is not None:
            raise ValueError("normalization of moving bumps is not supported")
        integral = 1.0
        expr = div(expr, float(np.prod([bump_integral() * ri for ri in r])))
    kind = "omega_dependent" if expr.has_omega else "standard"
    return TestFunction(expr, support, kind, probe_id, integral, omega_min=omega_min)


def _omega_bound(e, omega_min):
    """Largest |e| over omega >= omega_min for the simple shifts used here."""
    if not e.has_omega:
        return abs(float(evaluate(e, np.zeros((1, 1)), 1.0)[0]))
    ws = np.geomspace(omega_min, 1e6, 64)
    return max(abs(float(evaluate(e, np.zeros((1, 1)), w)[0])) for w in ws)


def modulated_bump(center, radius, axis=1, theta=0.0, normalize=True, probe_id="",
                   domain=None, dim=None):
    """sin(omega * x_axis + theta) times a (normalized) tensor bump."""
    base = bump_function(center, radius, normalize, dim, domain=domain)
    wave = sin(add(mul(OMEGA, x(axis)), float(theta)))
    return TestFunction(mul(wave, base.expr), base.support, "omega_dependent", probe_id,
                        base.integral, verify=False)


def mollifier(scale, center=0.0, probe_id="", domain=None, scale_min=None):
    """psi_m(x) = m psi(m (x - c)) in 1D with psi the normalized bump on [-1, 1].

    `scale` is a number or an omega-dependent Expr; for the latter give
    `scale_min`, its smallest value on the grid, which fixes the support box.
    """
    m = as_expr(scale)
    if m.has_omega:
        if scale_min is None:
            raise ValueError("omega-dependent mollifiers need scale_min")
        width = 1.0 / float(scale_min)
    else:
        width = 1.0 / float(evaluate(m, np.zeros((1, 1)), 1.0)[0])
    c = float(center)
    expr = div(mul(m, bump(mul(m, sub(x(1), c)))), bump_integral())
    support = CompactBox((c - width,), (c + width,))
    _check_domain(support, domain)
    kind = "omega_dependent" if m.has_omega else "standard"
    return TestFunction(expr, support, kind, probe_id, integral=1.0)


def indicator(box, probe_id="", domain=None):
    if not isinstance(box, CompactBox):
        box = CompactBox.from_intervals(box)
    _check_domain(box, domain)
    return TestFunction(as_expr(1.0), box, "indicator", probe_id, verify=False)


def build_test_function(spec, domain=None):
    """Build a probe from a plain dict, e.g. {"kind": "bump", "center": 0, "radius": 1}.

    Kinds: bump, tensor (list of {center, radius} factors), modulated,
    mollifier, indicator.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    pid = spec.pop("probe_id", "")
    if kind == "bump":
        return bump_function(spec["center"], spec["radius"], spec.get("normalize", False),
                             probe_id=pid, domain=domain)
    if kind == "tensor":
        factors = spec["factors"]
        return bump_function([f["center"] for f in factors], [f["radius"] for f in factors],
                             spec.get("normalize", False), probe_id=pid, domain=domain)
    if kind == "modulated":
        return modulated_bump(spec["center"], spec["radius"], spec.get("axis", 1),
                              spec.get("theta", 0.0), spec.get("normalize", True),
                              probe_id=pid, domain=domain)
    if kind == "mollifier":
        return mollifier(spec["scale"], spec.get("center", 0.0), pid, domain,
                         spec.get("scale_min"))
    if kind == "indicator":
        return indicator(spec["box"], pid, domain)
    raise ValueError(f"unknown test function spec kind {kind!r}")


@dataclass
class ProbeBattery:
    kind: str
    probes: list

    def __post_init__(self):
        if self.kind not in ("fin_battery", "unrestricted_battery"):
            raise ValueError(f"unknown battery kind {self.kind!r}")
        ids = [p.probe_id for p in self.probes]
        if len(set(ids)) != len(ids):
            raise ValueError("probe ids must be unique")

    def __iter__(self):
        return iter(self.probes)

    def __len__(self):
        return len(self.probes)

    @property
    def ids(self):
        return [p.probe_id for p in self.probes]

    def extended(self, extra, kind=None):
        return ProbeBattery(kind or self.kind, list(self.probes) + list(extra))

    def fin_check(self, K, grid, order=FIN_CHECK_ORDER, cfg=None):
        """Per-probe GrowthClass of the order-`order` seminorm across the grid."""
        out = {}
        for phi in self.probes:
            samples = []
            for w in grid:
                best = 0.0
                for j in range(order + 1):
                    best = max(best, derivative_sup(phi, K, j, w, cfg)[0])
                samples.append((w, best))
            # uniform boundedness is about growth across omega, not size: a
            # narrow standard bump has large but omega-independent seminorms
            ref = samples[0][1] if samples[0][1] > 0 else 1.0
            out[phi.probe_id] = classify_growth([(w, v / ref) for w, v in samples])
        return out


def fin_battery(K, domain=None, omega_min=OMEGA_MIN):
    """Twelve probes with omega-uniformly bounded derivatives, supported in K."""
    n = K.dim
    L = np.array(K.lengths)
    mid = np.array(K.center)
    centers = [mid, mid - 0.25 * L, mid + 0.25 * L]
    probes = []
    big = []
    for ci, c in enumerate(centers):
        for ri, frac in enumerate((0.25, 0.125)):
            phi = bump_function(tuple(c), tuple(frac * L), probe_id=f"bump-c{ci}-r{ri}",
                                domain=domain)
            probes.append(phi)
            if ri == 0:
                big.append((ci, phi))
    for ci, phi in big:
        d = None
        for axis in range(1, n + 1):
            term = derivative(phi.expr, axis)
            d = term if d is None else add(d, term)
        probes.append(TestFunction(d, phi.support, "standard", f"dbump-c{ci}", verify=False))
    inv = div(1.0, OMEGA)
    r = tuple(0.25 * L)
    for sign, tag in ((1.0, "+"), (-1.0, "-")):
        probes.append(bump_function(tuple(mid), r, shift=mul(sign, inv),
                                    probe_id=f"shift{tag}", domain=domain,
                                    omega_min=omega_min))
    probes.append(bump_function(tuple(mid), r, stretch=add(1.0, inv),
                                probe_id="stretch", domain=domain, omega_min=omega_min))
    for phi in probes:
        if not K.contains_box(phi.support):
            raise ValueError("box too small for the default battery")
    return ProbeBattery("fin_battery", probes)


def phi0(K, domain=None):
    """Normalized tensor bump filling K."""
    return bump_function(K.center, tuple(0.5 * L for L in K.lengths), normalize=True,
                         probe_id="phi0", domain=domain)


def unrestricted_battery(K, domain=None, omega_min=OMEGA_MIN):
    """fin_battery plus sin(omega x_i + theta) phi0 for theta in {0, pi/2}."""
    base = fin_battery(K, domain, omega_min)
    extra = []
    for axis in range(1, K.dim + 1):
        for theta, tag in ((0.0, "0"), (math.pi / 2, "pi2")):
            extra.append(modulated_bump(K.center, tuple(0.5 * L for L in K.lengths), axis,
                                        theta, True, f"mod-x{axis}-{tag}", domain))
    return base.extended(extra, "unrestricted_battery")


def default_box(domain):
    """A box well inside the domain: the middle 40 % of finite axes, [-1, 1] otherwise.

    40 % keeps the default battery within the node cap for 2D at omega = 256
    on a domain of side 4.
    """
    lows, highs = [], []
    for a, b in domain:
        if math.isfinite(a) and math.isfinite(b):
            m, h = 0.5 * (a + b), 0.2 * (b - a)
            lows.append(m - h)
            highs.append(m + h)
        else:
            lo = a if math.isfinite(a) else -math.inf
            hi = b if math.isfinite(b) else math.inf
            c = 0.0 if not (math.isfinite(lo) or math.isfinite(hi)) else (
                lo + 2.0 if math.isfinite(lo) else hi - 2.0)
            lows.append(c - 1.0)
            highs.append(c + 1.0)
    return CompactBox(tuple(lows), tuple(highs))


@dataclass
class PairResult:
    probe_id: str
    samples: list  # (omega, value)
    abs_values: list  # integral of |f phi| per omega
    floors: list
    growth: object

    def value_at(self, omega):
        for w, v in self.samples:
            if w == omega:
                return v
        raise KeyError(omega)

    def to_dict(self):
        return {
            "probe_id": self.probe_id,
            "samples": [[w, v] for w, v in self.samples],
            "floors": list(self.floors),
            "growth": self.growth.to_dict(),
        }


# relative accuracy of a primitive evaluated inside an integrand
PRIMITIVE_BUDGET = 1e-9


def has_primitive(expr):
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, (Antideriv, Integral)):
            return True
        stack.extend(e.children())
    return False


def pair_floor(omega, support, abs_value, primitive=False):
    """Noise level of a pairing.

    sin(omega x) loses eps*omega*|x| absolutely; integrands holding primitive
    nodes also carry the primitive budget relative to the integral of |f phi|.
    """
    R = max(max(abs(a), abs(b)) for a, b in support.intervals)
    floor = 4.0 * EPS * (1.0 + omega * R) * abs_value
    if primitive:
        floor += 10.0 * PRIMITIVE_BUDGET * abs_value
    return max(1e-14, floor)


def _integrand(f, phi):
    return f.expr if phi.kind == "indicator" else mul(f.expr, phi.expr)


def pair(f, phi, grid, cfg=None, net=None, ctx=None, terms=None):
    """Pairing integral of f against phi at every grid omega, plus its class.

    When f is a difference whose parts cancel, `terms` lists the parts; the
    primitive share of the noise floor then scales with their pairings.
    """
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    if not isinstance(f, NetFunction):
        raise TypeError("pair expects a NetFunction")
    if phi.dim != f.dim:
        raise ValueError("probe and net dimensions differ")
    if not phi.support.inside(f.domain, strict=False):
        raise ValueError("probe support leaves the domain of the net")
    ctx = ctx or EvalContext(cfg, f.domain)
    body = NetFunction(_integrand(f, phi), f.domain)
    primitive = has_primitive(body.expr)
    samples, absv, floors = [], [], []
    for w in grid:
        r = integrate_box_detailed(body, phi.support, w, cfg, ctx)
        samples.append((w, r.value))
        absv.append(r.abs_value)
        scale = r.abs_value
        if primitive and terms:
            scale = max(scale, sum(
                integrate_box_detailed(NetFunction(_integrand(NetFunction(t, f.domain), phi),
                                                   f.domain), phi.support, w, cfg, ctx).abs_value
                for t in terms))
        floors.append(pair_floor(w, phi.support, scale, primitive))
    growth = classify_growth(samples, net.tau, net.abs_bound, floors)
    return PairResult(phi.probe_id, samples, absv, floors, growth)


@dataclass
class PairingReport:
    verdict: bool
    battery: str
    results: list
    caveat: str = BATTERY_CAVEAT

    @property
    def classes(self):
        return {r.probe_id: r.growth.label for r in self.results}

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "battery": self.battery,
            "caveat": self.caveat,
            "probes": [r.to_dict() for r in sorted(self.results, key=lambda r: r.probe_id)],
        }

    def csv_rows(self):
        rows = []
        for r in sorted(self.results, key=lambda r: r.probe_id):
            for w, v in r.samples:
                rows.append((w, r.probe_id, v, "", r.growth.p))
        return rows


def _pair_all(f, battery, grid, cfg, net, terms=None):
    ctx = EvalContext(cfg, f.domain)
    return [pair(f, phi, grid, cfg, net, ctx, terms) for phi in battery]


def is_s_distribution(f, battery, grid, cfg=None, net=None):
    """True iff every probe pairing is finite or infinitesimal."""
    if battery.kind != "fin_battery":
        raise ValueError("is_s_distribution needs a fin_battery")
    results = _pair_all(f, battery, grid, cfg, net)
    verdict = all(r.growth.bounded for r in results)
    return PairingReport(verdict, battery.kind, results)


def dprime_close(f, g, battery, grid, cfg=None, net=None):
    """True iff f - g pairs infinitesimally with every probe."""
    if battery.kind != "fin_battery":
        raise ValueError("dprime_close needs a fin_battery")
    if tuple(f.domain) != tuple(g.domain):
        raise ValueError("nets live on different domains")
    diff = NetFunction(sub(f.expr, g.expr), f.domain)
    results = _pair_all(diff, battery, grid, cfg, net, (f.expr, g.expr))
    verdict = all(r.growth.label == "infinitesimal" for r in results)
    return PairingReport(verdict, battery.kind, results)


@dataclass
class RatioRow:
    probe_id: str
    m: int
    samples: list  # (omega, ratio)
    growth: object

    def to_dict(self):
        return {"probe_id": self.probe_id, "m": self.m,
                "samples": [[w, v] for w, v in self.samples],
                "growth": self.growth.to_dict()}


@dataclass
class OrderEstimate:
    m: int
    label: str  # "ok" or "exceeds"
    C: float
    kind: str  # "s_order" or "distributional"
    rows: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    C0: float = None
    caveat: str = ORDER_CAVEAT

    def ratio(self, probe_id, m):
        for r in self.rows:
            if r.probe_id == probe_id and r.m == m:
                return r
        raise KeyError((probe_id, m))

    def to_dict(self):
        return {
            "m": self.m,
            "label": self.label,
            "C": self.C,
            "C0": self.C0,
            "kind": self.kind,
            "caveat": self.caveat,
            "battery_caveat": BATTERY_CAVEAT,
            "ratios": [r.to_dict() for r in sorted(self.rows, key=lambda r: (r.probe_id, r.m))],
            "pairs": [p.to_dict() for p in sorted(self.pairs, key=lambda p: p.probe_id)],
        }

    def csv_rows(self):
        rows = []
        values = {p.probe_id: dict(p.samples) for p in self.pairs}
        for r in sorted(self.rows, key=lambda r: (r.probe_id, r.m)):
            for w, q in r.samples:
                rows.append((w, f"{r.probe_id}@m{r.m}", values[r.probe_id][w], q,
                             r.growth.p))
        return rows


class _Seminorms:
    """Lazily extended seminorm profiles per (probe, omega)."""

    def __init__(self, K, cfg):
        self.K, self.cfg = K, cfg
        self.orders = {}
        self.ctx = EvalContext(cfg)

    def __call__(self, phi, m, omega):
        key = (phi.probe_id, omega)
        have = self.orders.setdefault(key, [])
        while len(have) <= m:
            v, _ = derivative_sup(phi, self.K, len(have), omega, self.cfg, self.ctx)
            have.append(max(v, have[-1]) if have else v)
        return have[m]


def _ratio_rows(pairs, battery, K, m, grid, semi, net):
    rows = []
    for res, phi in zip(pairs, battery):
        samples, floors = [], []
        for (w, v), fl in zip(res.samples, res.floors):
            s = semi(phi, m, w)
            samples.append((w, abs(v) / s if s > 0 else 0.0))
            floors.append(fl / s if s > 0 else 1e-14)
        rows.append(RatioRow(phi.probe_id, m, samples,
                             classify_growth(samples, net.tau, net.abs_bound, floors)))
    return rows


def _check_battery_box(battery, K, f):
    if not K.inside(f.domain, strict=False):
        raise ValueError("K leaves the domain of the net")
    for phi in battery:
        if phi.kind != "indicator" and not K.contains_box(phi.support):
            raise ValueError(f"probe {phi.probe_id} is not supported in K")


def estimate_s_order(f, K, battery, grid, m_max=M_MAX, cfg=None, net=None):
    """Smallest m with |pair(f, phi)| / seminorm_m(phi) bounded for every probe."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    _check_battery_box(battery, K, f)
    pairs = _pair_all(f, battery, grid, cfg, net)
    semi = _Seminorms(K, cfg)
    all_rows = []
    for m in range(m_max + 1):
        rows = _ratio_rows(pairs, battery, K, m, grid, semi, net)
        all_rows.extend(rows)
        if all(r.growth.bounded for r in rows):
            C = max(r.samples[-1][1] for r in rows)
            return OrderEstimate(m, "ok", C, "s_order", all_rows, pairs)
    return OrderEstimate(m_max + 1, "exceeds", math.inf, "s_order", all_rows, pairs)


def estimate_distributional_order(f, K, battery, grid, m_max=M_MAX, cfg=None, net=None):
    """Smallest m with max(0, R_m - C0) infinitesimal on every probe for one C0 in the ladder."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    if battery.kind != "fin_battery":
        raise ValueError("the distributional order uses a fin_battery")
    _check_battery_box(battery, K, f)
    pairs = _pair_all(f, battery, grid, cfg, net)
    if not all(r.growth.bounded for r in pairs):
        raise ValueError("not an S-distribution on the battery")
    semi = _Seminorms(K, cfg)
    all_rows = []
    for m in range(m_max + 1):
        rows = _ratio_rows(pairs, battery, K, m, grid, semi, net)
        all_rows.extend(rows)
        for C0 in C0_LADDER:
            ok = True
            for r in rows:
                excess = [(w, max(0.0, q - C0)) for w, q in r.samples]
                floor = [max(1e-14, 1e-9 * C0)] * len(excess)
                if classify_growth(excess, net.tau, net.abs_bound, floor).label != "infinitesimal":
                    ok = False
                    break
            if ok:
                C = max(r.samples[-1][1] for r in rows)
                return OrderEstimate(m, "ok", C, "distributional", all_rows, pairs, C0)
    return OrderEstimate(m_max + 1, "exceeds", math.inf, "distributional", all_rows, pairs)


def default_grid(dim):
    return OmegaGrid.for_dim(dim)
