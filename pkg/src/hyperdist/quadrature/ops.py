"""Box integration, axis primitives and sampled derivative sup-norms for nets."""

import math
from dataclasses import dataclass

import numpy as np

from ..exprlang import (EvalContext, NetFunction, bump_features, differentiate, evaluate,
                        multi_indices)
from ..exprlang import nodes as N
from ..exprlang.nodes import Expr
from .box import CompactBox
from .rules import (MAX_POINTS, QuadratureConfig, ResolutionError, converged, gauss_legendre,
                    line_integral, with_features)

# sup-norm sampling: points per unit length relative to the quadrature density
SUP_OVERSAMPLE = 4
SUP_POINT_CAP = 2 ** 22
# tensor grids in 2D and up are capped harder; evaluation cost grows with nesting
SUP_POINT_CAP_ND = 2 ** 18


@dataclass
class BoxIntegral:
    value: float
    abs_value: float
    nodes: int
    change: float


def _split(f):
    if isinstance(f, NetFunction):
        return f.expr, f.domain
    if isinstance(f, Expr):
        return f, None
    raise TypeError("expected NetFunction or Expr")


_NONLINEAR = (N.Sin, N.Cos, N.Exp, N.Bump, N.BumpDeriv)


def fast_axes(expr):
    """Coordinates that enter an omega-dependent nonlinear argument.

    Only these axes need omega-scaled panels; along the others the net is a
    standard smooth function times powers of omega.
    """
    fast, seen, stack = set(), set(), [expr]
    while stack:
        e = stack.pop()
        if id(e) in seen:
            continue
        seen.add(id(e))
        if isinstance(e, _NONLINEAR) and e.a.has_omega:
            fast |= e.a.free
        elif isinstance(e, N.Div) and e.b.has_omega:
            fast |= e.b.free
        elif isinstance(e, N.Pow) and e.n < 0 and e.a.has_omega:
            fast |= e.a.free
        stack.extend(e.children())
    return fast


def _axis_edges(K, panels, order, features, level):
    return [with_features(np.linspace(a, b, p + 1), f, order, level)
            for (a, b), p, f in zip(K.intervals, panels, features)]


def _tensor_rule(all_edges, order):
    axes_x, axes_w = [], []
    t, w = gauss_legendre(order)
    for edges in all_edges:
        h = np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        axes_x.append((mid[:, None] + 0.5 * h[:, None] * t).ravel())
        axes_w.append((0.5 * h[:, None] * w).ravel())
    mesh = np.meshgrid(*axes_x, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    W = axes_w[0]
    for wi in axes_w[1:]:
        W = np.multiply.outer(W, wi).ravel()
    return X, W


def integrate_box_detailed(f, K, omega, cfg=None, ctx=None):
    """Composite Gauss-Legendre integral of f over K with the doubling check.

    The node count per axis follows cfg.nodes_per_axis; the estimate at N is
    compared with N/2 and N is doubled until the change is below
    10 * tol * max(vol K, integral of |f|).
    """
    cfg = cfg or QuadratureConfig()
    expr, domain = _split(f)
    if domain is not None and not K.inside(domain, strict=False):
        raise ValueError("integration box leaves the domain")
    ctx = ctx or EvalContext(cfg, domain)
    order = cfg.panel_order
    fast = fast_axes(expr)
    panels = [cfg.panels_for(L, omega if i + 1 in fast else 1.0)
              for i, L in enumerate(K.lengths)]
    features = [bump_features(expr, i + 1, omega, ctx) for i in range(K.dim)]

    def estimate(ps, level):
        edges = _axis_edges(K, ps, order, features, level)
        total = math.prod(len(e) - 1 for e in edges) * order ** K.dim
        if total > cfg.node_cap or total > MAX_POINTS:
            raise ResolutionError(
                f"box integral needs more than {cfg.node_cap} nodes at omega={omega:g}")
        X, W = _tensor_rule(edges, order)
        vals = evaluate(expr, X, omega, ctx)
        return float(np.dot(W, vals)), float(np.dot(W, np.abs(vals))), total

    level = 1
    coarse = estimate([(p + 1) // 2 for p in panels], level)
    while True:
        fine = estimate(panels, 2 * level)
        scale = max(K.volume, fine[1])
        if converged(fine[0], coarse[0], scale, cfg):
            return BoxIntegral(fine[0], fine[1], fine[2], abs(fine[0] - coarse[0]))
        coarse = fine
        panels = [2 * p for p in panels]
        level *= 2


def integrate_box(f, K, omega, cfg=None, ctx=None):
    return integrate_box_detailed(f, K, omega, cfg, ctx).value


def primitive_eval(body, var, lower, upper, tilde_x, omega, cfg=None, ctx=None):
    """Integral of body along axis `var` from lower to upper, other coordinates at tilde_x.

    upper < lower gives the negated integral; upper == lower gives exactly 0.
    """
    cfg = cfg or QuadratureConfig()
    if upper == lower:
        return 0.0
    tilde_x = [float(v) for v in tilde_x]
    n = len(tilde_x) + 1
    ctx = ctx or EvalContext(cfg)

    def sample(t):
        pts = np.empty((t.size, n))
        pts[:, var - 1] = t
        others = [i for i in range(n) if i != var - 1]
        for i, v in zip(others, tilde_x):
            pts[:, i] = v
        return evaluate(body, pts, omega, ctx)[None, :]

    feats = bump_features(body, var, omega, ctx)
    return float(line_integral(sample, lower, upper, omega, cfg, features=feats)[0])


def sup_grid(K, omega, cfg=None, oversample=SUP_OVERSAMPLE):
    """Sampling grid for sup-norms, density tied to omega, capped in total size."""
    cfg = cfg or QuadratureConfig()
    counts = [math.ceil(oversample * cfg.nodes_per_axis(L, omega)) + 1 for L in K.lengths]
    total = math.prod(counts)
    cap = SUP_POINT_CAP if K.dim == 1 else SUP_POINT_CAP_ND
    if total > cap:
        shrink = (cap / total) ** (1.0 / K.dim)
        counts = [max(3, int(c * shrink)) for c in counts]
    return K.grid(counts)


def _sampling_box(phi, K):
    support = getattr(phi, "support", None)
    if support is None:
        return K
    lows = [max(a, c) for a, c in zip(K.lows, support.lows)]
    highs = [min(b, d) for b, d in zip(K.highs, support.highs)]
    if any(lo >= hi for lo, hi in zip(lows, highs)):
        return None
    return CompactBox(tuple(lows), tuple(highs))


def derivative_sup(phi, K, j, omega, cfg=None, ctx=None):
    """max over |alpha| == j of the sampled sup of |d^alpha phi| on K, with grid size."""
    cfg = cfg or QuadratureConfig()
    if getattr(phi, "kind", None) == "indicator":
        if j > 0:
            raise ValueError("indicator probes have no derivatives")
        return 1.0, 1
    expr = phi.expr if hasattr(phi, "expr") else phi
    box = _sampling_box(phi, K)
    if box is None:
        return 0.0, 0
    X, _ = sup_grid(box, omega, cfg)
    ctx = ctx or EvalContext(cfg)
    best = 0.0
    for alpha in multi_indices(K.dim, j):
        if sum(alpha) != j:
            continue
        vals = evaluate(differentiate(expr, alpha), X, omega, ctx)
        best = max(best, float(np.max(np.abs(vals))))
    return best, X.shape[0]


def seminorm_profile(phi, K, m, omega, cfg=None, ctx=None):
    """[max_{|alpha|<=j} sup_K |d^alpha phi| for j = 0..m] and the grid size used."""
    per_order, size = [], 0
    for j in range(m + 1):
        v, size = derivative_sup(phi, K, j, omega, cfg, ctx)
        per_order.append(v)
    return [float(v) for v in np.maximum.accumulate(per_order)], size


def seminorm(phi, K, m, omega, cfg=None, ctx=None):
    """max over |alpha| <= m of the sampled sup of |d^alpha phi| on K, with grid size."""
    if m < 0:
        raise ValueError("m must be >= 0")
    profile, size = seminorm_profile(phi, K, m, omega, cfg, ctx)
    return profile[m], size
