"""Corrected primitives, order reduction and the structure decompositions."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..exprlang import (
    OMEGA,
    Const,
    EvalContext,
    Integral,
    NetFunction,
    add,
    antideriv,
    bump,
    differentiate,
    div,
    evaluate,
    mul,
    neg,
    parse_sexpr,
    power,
    serialize,
    sub,
    x,
)
from ..netmodel import NetConfig, OmegaGrid, box_around, classify_growth, s_modulus, sup_profile
from ..pairing import (
    bump_function,
    bump_integral,
    estimate_s_order,
    indicator,
    pair,
    unrestricted_battery,
)
from ..quadrature import CompactBox, QuadratureConfig
from .cutoff import axis_bump, cutoff, default_phi0_params, inflated
from .slices import (
    DET_TOL,
    PolynomialCorrection,
    ReconstructionError,
    SlicePoints,
    kronecker_reconstruct,
    mollified_slice,
    vandermonde_reconstruct,
)

RESIDUAL_TOL = 1e-6
PAIRING_TOL = 1e-6
SUP_RATIO_LIMIT = 10.0
ZERO_SLOPE = -0.8
INFLATE = 0.25


class StructureError(ValueError):
    pass


class NotSContinuous(StructureError):
    pass


class MultiIndex(tuple):
    def __new__(cls, values):
        values = tuple(int(v) for v in values)
        if any(v < 0 for v in values):
            raise ValueError("multi-index entries must be >= 0")
        return super().__new__(cls, values)

    @property
    def order(self):
        return sum(self)


def dirac_net(dim=1, domain=None):
    """rho_omega(x) = prod_i omega * bump(omega x_i) / integral(bump)."""
    expr = None
    for i in range(1, dim + 1):
        factor = div(mul(OMEGA, bump(mul(OMEGA, x(i)))), bump_integral())
        expr = factor if expr is None else mul(expr, factor)
    return NetFunction(expr, domain or ((-2.0, 2.0),) * dim)


def _require_box_domain(f):
    if not isinstance(f, NetFunction):
        raise TypeError("expected a NetFunction")
    return f.domain


def corrected_antiderivative(f, axis, phi0=None):
    """g = F + G with F the primitive of f in x_axis from the axis midpoint and
    G = -integral of F(t, x~) phi0(t) dt, so that d_axis g = f.

    `phi0` is an Expr in the single coordinate x_axis with integral 1 and a
    (center, radius) support, passed as (expr, (lo, hi)); the default is a
    normalized bump centered on the axis with a quarter of its length as radius.
    """
    domain = _require_box_domain(f)
    if not 1 <= axis <= f.dim:
        raise ValueError("axis out of range")
    a, b = domain[axis - 1]
    if phi0 is None:
        center, radius = default_phi0_params(domain, axis)
        phi_expr, (lo, hi) = axis_bump(axis, center, radius), (center - radius, center + radius)
    else:
        phi_expr, (lo, hi) = phi0
        if phi_expr.free - {axis}:
            raise ValueError("phi0 must depend on the chosen axis only")
    if not (a <= lo and hi <= b):
        raise ValueError("phi0 support leaves the domain axis")
    if math.isfinite(a) and math.isfinite(b):
        c = 0.5 * (a + b)
    elif math.isfinite(a) or math.isfinite(b):
        c = 0.5 * (lo + hi)
    else:
        c = 0.0
    F = antideriv(f.expr, axis, c)
    G = neg(Integral(mul(F, phi_expr), axis, Const(float(lo)), Const(float(hi))))
    return f.with_expr(add(F, G))


def reduce_order(f, K, phi0s=None, outer=None):
    """Corrected primitive in every axis (1..n), then a cutoff equal to 1 on K.

    The cutoff vanishes outside `outer` (default: K grown by 25 % and
    clipped into the domain).
    """
    domain = _require_box_domain(f)
    outer = outer or K.inflate(INFLATE).clip(domain)
    if not outer.contains_box(K, strict=True):
        raise StructureError("K touches the boundary of the domain")
    g = f
    for axis in range(1, f.dim + 1):
        phi0 = None if phi0s is None else phi0s[axis - 1]
        g = corrected_antiderivative(g, axis, phi0)
    return g.with_expr(mul(g.expr, cutoff(K, outer)))


def corner_primitive(expr, K, times=1):
    """Iterated primitive from the corner (a_1..a_n) of K, `times` per axis."""
    out = expr
    for axis, (a, _) in enumerate(K.intervals, start=1):
        for _ in range(times):
            out = antideriv(out, axis, a)
    return out


def primitive_order_zero(f, K, variant="bounded", grid=None, check=False, cfg=None, net=None):
    """Bounded (d_1..d_n g = f) or S-continuous (d_1^2..d_n^2 h = f) primitive on K.

    With check=True the order-zero precondition is tested first: the S-order
    estimate on K must be 0 and the pairings with indicator probes of K and
    its halves must stay bounded.
    """
    if variant not in ("bounded", "scontinuous"):
        raise ValueError("variant must be 'bounded' or 'scontinuous'")
    _require_box_domain(f)
    if check:
        grid = grid or OmegaGrid.for_dim(f.dim)
        battery = unrestricted_battery(K, f.domain, grid.omega0)
        est = estimate_s_order(f, K, battery, grid, cfg=cfg, net=net)
        if est.m != 0:
            raise StructureError(f"order-zero precondition fails (estimated order {est.m})")
        for probe in _indicator_probes(K):
            if not pair(f, probe, grid, cfg, net).growth.bounded:
                raise StructureError(f"pairing with {probe.probe_id} is unbounded")
    times = 1 if variant == "bounded" else 2
    return f.with_expr(corner_primitive(f.expr, K, times))


def _indicator_probes(K):
    probes = [indicator(K, "ind-K")]
    for axis in range(K.dim):
        a, b = K.intervals[axis]
        m = 0.5 * (a + b)
        for tag, (lo, hi) in (("lo", (a, m)), ("hi", (m, b))):
            lows, highs = list(K.lows), list(K.highs)
            lows[axis], highs[axis] = lo, hi
            probes.append(indicator(CompactBox(tuple(lows), tuple(highs)),
                                    f"ind-x{axis + 1}-{tag}"))
    return probes


@dataclass
class Decomposition:
    alpha: MultiIndex
    g: NetFunction
    mode: str  # "finite_scontinuous" or "infinitesimal"
    K: CompactBox
    f: NetFunction
    grid: OmegaGrid
    report: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.report.get("passed", False))

    def to_dict(self):
        return {
            "alpha": list(self.alpha),
            "g": serialize(self.g.expr),
            "mode": self.mode,
            "K": self.K.to_list(),
            "f": serialize(self.f.expr),
            "domain": [list(ab) for ab in self.f.domain],
            "grid": {"omega0": self.grid.omega0, "ratio": self.grid.ratio,
                     "levels": self.grid.levels},
            "report": self.report,
        }

    @classmethod
    def from_dict(cls, data):
        domain = tuple(tuple(float(v) for v in ab) for ab in data["domain"])
        f = NetFunction(parse_sexpr(data["f"]), domain)
        g = NetFunction(parse_sexpr(data["g"]), domain)
        grid = OmegaGrid(**data["grid"])
        K = CompactBox.from_intervals(data["K"])
        return cls(MultiIndex(data["alpha"]), g, data["mode"], K, f, grid,
                   data.get("report", {}))


def _verification_points(K):
    per_axis = 257 if K.dim == 1 else 33
    X, _ = K.grid(per_axis)
    return X


def _pairing_probes(K, domain):
    L = np.array(K.lengths)
    mid = np.array(K.center)
    out = []
    for k, c in enumerate((mid, mid - 0.2 * L, mid + 0.2 * L)):
        out.append(bump_function(tuple(c), tuple(0.25 * L), probe_id=f"eq-{k}", domain=domain))
    return out


def verify_decomposition(f, g, alpha, K, mode, grid, cfg=None, net=None):
    """Check the decomposition invariants; every entry of the report is plain JSON."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    alpha = MultiIndex(alpha)
    ctx = EvalContext(cfg, f.domain)
    X = _verification_points(K)
    dg = differentiate(g.expr, alpha)

    residuals = []
    for w in grid:
        fv = evaluate(f.expr, X, w, ctx)
        gv = evaluate(dg, X, w, ctx)
        residuals.append(float(np.max(np.abs(gv - fv) / (1.0 + np.abs(fv)))))
    residual_ok = max(residuals) <= RESIDUAL_TOL

    sup_class, sups = sup_profile(g, K, grid, cfg, ctx, net)
    report = {
        "residuals": [[w, r] for w, r in zip(grid, residuals)],
        "residual_max": max(residuals),
        "residual_ok": bool(residual_ok),
        "sup": sup_class.to_dict(),
    }
    if mode == "finite_scontinuous":
        s0, s1 = sups[0][1], sups[-1][1]
        ratio = s1 / s0 if s0 > 0 else (0.0 if s1 == 0 else math.inf)
        modulus = s_modulus(g, K, grid, cfg=cfg, ctx=ctx, net=net)
        report.update({
            "sup_bounded": bool(sup_class.bounded),
            "sup_ratio": ratio,
            "sup_ratio_ok": bool(ratio <= SUP_RATIO_LIMIT),
            "modulus": modulus.to_dict(),
            "s_continuous": bool(modulus.verdict),
        })
        checks = ["residual_ok", "sup_bounded", "sup_ratio_ok", "s_continuous"]
    elif mode == "infinitesimal":
        slope = sup_class.p
        slope_ok = sup_class.label == "infinitesimal" and (
            slope == -math.inf or slope <= ZERO_SLOPE)
        report.update({
            "sup_infinitesimal": bool(sup_class.label == "infinitesimal"),
            "sup_slope": slope if math.isfinite(slope) else "-inf",
            "sup_slope_ok": bool(slope_ok),
        })
        checks = ["residual_ok", "sup_infinitesimal", "sup_slope_ok"]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    sign = (-1.0) ** alpha.order
    worst = 0.0
    rows = []
    for phi in _pairing_probes(K, f.domain):
        dphi = phi.__class__(differentiate(phi.expr, alpha), phi.support, phi.kind,
                             f"d{list(alpha)}({phi.probe_id})", verify=False)
        left = pair(f, phi, grid, cfg, net, ctx)
        right = pair(g, dphi, grid, cfg, net, ctx)
        for (w, lv), (_, rv), la, ra in zip(left.samples, right.samples,
                                            left.abs_values, right.abs_values):
            err = abs(lv - sign * rv) / (1.0 + la + ra)
            worst = max(worst, err)
            rows.append([phi.probe_id, w, lv, sign * rv, err])
    report["pairing"] = rows
    report["pairing_residual"] = worst
    report["pairing_ok"] = bool(worst <= PAIRING_TOL)
    checks.append("pairing_ok")
    report["passed"] = all(report[c] for c in checks)
    return report


def _build_g(h_expr, K, Kp):
    return mul(h_expr, cutoff(K, Kp))


def local_structure(f, K, grid=None, cfg=None, net=None, m=None, verify=True):
    """f = d^alpha g on K with g finite and S-continuous, alpha = (m+2, ..., m+2)."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    grid = grid or OmegaGrid.for_dim(f.dim)
    domain = _require_box_domain(f)
    Kp = inflated(K, domain, INFLATE)
    order = None
    if m is None:
        order = estimate_s_order(f, Kp, unrestricted_battery(Kp, domain, grid.omega0), grid,
                                 cfg=cfg, net=net)
        if order.label == "exceeds":
            raise StructureError("order exceeds m_max on the enlarged box")
        m = order.m
    r = f
    for _ in range(m):
        r = reduce_order(r, Kp)
    h = primitive_order_zero(r, Kp, "scontinuous")
    g = f.with_expr(_build_g(h.expr, K, Kp))
    alpha = MultiIndex((m + 2,) * f.dim)
    dec = Decomposition(alpha, g, "finite_scontinuous", K, f, grid,
                        stages={"K_prime": Kp, "m": m, "h": h, "order": order})
    if verify:
        dec.report = verify_decomposition(f, g, alpha, K, dec.mode, grid, cfg, net)
        dec.report["m"] = m
        dec.report["K_prime"] = Kp.to_list()
    return dec


def polynomial_correction(h, alpha, Kp, grid):
    """Reconstruct h~ = sum_i sum_j g_ij(x~_i) x_i**j from mollified slices of h."""
    n = h.dim
    if n > 2:
        raise NotImplementedError("polynomial corrections are implemented for n <= 2")
    points = SlicePoints.default(Kp, alpha)
    omega_min = grid.omegas[0]
    diagnostics = {"points": [list(p) for p in points.points]}
    per_axis = []
    for axis in range(1, n + 1):
        slices = [(c, mollified_slice(h.expr, axis, c, Kp.intervals, omega_min))
                  for c in points.points[axis - 1]]
        coefs, info = vandermonde_reconstruct(slices, alpha[axis - 1])
        diagnostics[f"axis{axis}"] = info.to_dict()
        per_axis.append(coefs)
    if n == 2:
        c1, c2 = points.points
        values = []
        for c in c1:
            inner = mollified_slice(h.expr, 1, c, Kp.intervals, omega_min)
            values.append([mollified_slice(inner, 2, d, Kp.intervals, omega_min) for d in c2])
        cross, info = kronecker_reconstruct(c1, c2, values)
        diagnostics["cross"] = info.to_dict()
        # absorb the doubly counted tensor part into the axis-1 coefficient nets
        for j1, row in enumerate(cross):
            tensor = None
            for j2, hc in enumerate(row):
                term = mul(hc, power(x(2), j2))
                tensor = term if tensor is None else add(tensor, term)
            per_axis[0][j1] = sub(per_axis[0][j1], tensor)
    return PolynomialCorrection(per_axis, points.points, diagnostics)


def zero_local_structure(f, K, grid=None, cfg=None, net=None, m=None, verify=True):
    """f = d^alpha g on K with g infinitesimal-valued, for f D'-close to zero."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    grid = grid or OmegaGrid.for_dim(f.dim)
    domain = _require_box_domain(f)
    Kp = inflated(K, domain, INFLATE)
    base = local_structure(f, Kp, grid, cfg, net, m=m, verify=False)
    h = base.stages["h"].with_expr(base.g.expr)
    alpha = base.alpha
    try:
        correction = polynomial_correction(h, alpha, Kp, grid)
    except ReconstructionError as exc:
        raise StructureError(f"polynomial reconstruction failed: {exc}") from exc
    g = f.with_expr(mul(sub(h.expr, correction.expression()), cutoff(K, Kp)))
    dec = Decomposition(alpha, g, "infinitesimal", K, f, grid,
                        stages={"K_prime": Kp, "m": base.stages["m"], "h": h,
                                "correction": correction})
    if verify:
        dec.report = verify_decomposition(f, g, alpha, K, dec.mode, grid, cfg, net)
        diag = correction.diagnostics
        det_ok = all(diag[k]["det_rel_error"] <= DET_TOL
                     for k in diag if k.startswith("axis") or k == "cross")
        dec.report["reconstruction"] = diag
        dec.report["det_ok"] = bool(det_ok)
        dec.report["m"] = base.stages["m"]
        dec.report["K_prime"] = Kp.to_list()
    return dec


def point_value(f, a, grid=None, radius=0.1, cfg=None, net=None):
    """Standard part of f(a, omega) for f S-continuous near a."""
    cfg = cfg or QuadratureConfig()
    net = net or NetConfig()
    grid = grid or OmegaGrid.for_dim(f.dim)
    a = tuple(float(v) for v in np.atleast_1d(a))
    if len(a) != f.dim or not f.contains(a):
        raise ValueError("point must lie in the domain")
    K = box_around(a, radius, f.domain)
    ctx = EvalContext(cfg, f.domain)
    modulus = s_modulus(f, K, grid, cfg=cfg, ctx=ctx, net=net)
    if not modulus.verdict:
        raise NotSContinuous(f"net is not S-continuous near {a}")
    samples = [(w, float(evaluate(f.expr, np.array([a]), w, ctx)[0])) for w in grid]
    growth = classify_growth(samples, net.tau, net.abs_bound)
    if growth.label == "infinitesimal":
        growth.standard_part = 0.0
    elif growth.label != "finite":
        raise StructureError(f"value at {a} is not finite ({growth.label})")
    return growth
