"""Vectorized numeric evaluation of expressions at (points, omega).

Antiderivative and definite-integral nodes are evaluated through cached
line primitives: the integrand is sampled once per (node, omega, line family)
on a composite Gauss-Legendre mesh and every later query is answered by
panel interpolation.  Nested integration therefore costs linear, not
exponential, time in the nesting depth.
"""

import math
import threading

import numpy as np

from ..quadrature.rules import LinePrimitive, QuadratureConfig, line_integral
from . import nodes as N
from .calculus import bump_values, derivative


class EvalContext:
    """Quadrature settings, the ambient box and the primitive cache.

    A context is not shared between threads; make one per worker.
    """

    def __init__(self, cfg=None, domain=None):
        self.cfg = cfg or QuadratureConfig()
        self.domain = None if domain is None else [tuple(map(float, ab)) for ab in domain]
        self._cache = {}
        self._owner = threading.get_ident()

    def clear(self):
        self._cache.clear()

    def axis_range(self, axis):
        if self.domain is None or axis > len(self.domain):
            return -math.inf, math.inf
        return self.domain[axis - 1]


def bump_features(expr, var, omega, ctx=None):
    """Support intervals along `var` of bumps whose argument is affine in var alone.

    These are narrow features (width ~1/omega for Dirac-type nets) that a
    uniform mesh cannot resolve; quadrature places extra panels across them.
    """
    ctx = ctx or EvalContext()
    key = ("features", expr, var, float(omega))
    hit = ctx._cache.get(key)
    if hit is not None:
        return hit
    out = set()
    for node in N.walk(expr):
        if not isinstance(node, (N.Bump, N.BumpDeriv)) or node.a.free != {var}:
            continue
        slope = derivative(node.a, var)
        if var in slope.free:
            continue
        origin = np.zeros((1, var))
        a = float(evaluate(slope, origin, omega, ctx)[0])
        b = float(evaluate(node.a, origin, omega, ctx)[0])
        if a == 0.0 or not (math.isfinite(a) and math.isfinite(b)):
            continue
        lo, hi = sorted(((-1.0 - b) / a, (1.0 - b) / a))
        out.add((lo, hi))
    result = sorted(out)
    ctx._cache[key] = result
    return result


def evaluate(expr, points, omega, ctx=None):
    """Values of expr at points (shape (Q, n) or (n,)) for one omega."""
    ctx = ctx or EvalContext()
    X = np.atleast_2d(np.asarray(points, dtype=float))
    need = N.max_coord(expr)
    if X.shape[1] < need:
        raise ValueError(f"points have {X.shape[1]} coordinates, expression uses x{need}")
    out = _Evaluator(X, float(omega), ctx).run(expr)
    return np.broadcast_to(out, (X.shape[0],)).astype(float, copy=True)


class _Evaluator:
    def __init__(self, X, omega, ctx):
        self.X = X
        self.omega = omega
        self.ctx = ctx
        self.memo = {}

    def run(self, e):
        try:
            return self.memo[e]
        except KeyError:
            pass
        v = self._eval(e)
        self.memo[e] = v
        return v

    def _eval(self, e):
        r = self.run
        if isinstance(e, N.Const):
            return e.value
        if isinstance(e, N.Coord):
            return self.X[:, e.index - 1]
        if isinstance(e, N.Omega):
            return self.omega
        if isinstance(e, N.OmegaScale):
            return float(math.ceil(self.omega ** e.theta - 1e-12))
        if isinstance(e, N.Add):
            return r(e.a) + r(e.b)
        if isinstance(e, N.Sub):
            return r(e.a) - r(e.b)
        if isinstance(e, N.Mul):
            a = r(e.a)
            if np.ndim(a) == 0 and a == 0.0:
                return 0.0
            return a * r(e.b)
        if isinstance(e, N.Div):
            return r(e.a) / r(e.b)
        if isinstance(e, N.Neg):
            return -r(e.a)
        if isinstance(e, N.Pow):
            return r(e.a) ** float(e.n) if e.n < 0 else r(e.a) ** e.n
        if isinstance(e, N.Sin):
            return np.sin(r(e.a))
        if isinstance(e, N.Cos):
            return np.cos(r(e.a))
        if isinstance(e, N.Exp):
            return np.exp(r(e.a))
        if isinstance(e, N.Bump):
            return bump_values(r(e.a))
        if isinstance(e, N.BumpDeriv):
            return bump_values(r(e.a), e.k)
        if isinstance(e, N.Antideriv):
            return self._antideriv(e)
        if isinstance(e, N.Integral):
            return self._integral(e)
        raise TypeError(f"cannot evaluate {type(e).__name__}")

    def _lines(self, body, var):
        """Group query rows by the coordinates (other than var) the integrand reads."""
        cols = sorted(c - 1 for c in body.free if c != var)
        if not cols:
            return cols, np.zeros((1, 0)), np.zeros(self.X.shape[0], dtype=int)
        keys = self.X[:, cols]
        lines, inv = np.unique(keys, axis=0, return_inverse=True)
        return cols, lines, inv.ravel()

    def _sampler(self, body, var, cols, lines):
        n = self.X.shape[1]
        ctx, omega = self.ctx, self.omega

        def sample(t):
            L = lines.shape[0]
            pts = np.zeros((L * t.size, n))
            pts[:, var - 1] = np.tile(t, L)
            for k, c in enumerate(cols):
                pts[:, c] = np.repeat(lines[:, k], t.size)
            return evaluate(body, pts, omega, ctx).reshape(L, t.size)

        return sample

    def _antideriv(self, e):
        cols, lines, inv = self._lines(e.body, e.var)
        q = self.X[:, e.var - 1]
        qmin, qmax = float(q.min()), float(q.max())
        key = ("antideriv", e, self.omega, lines.tobytes(), lines.shape)
        prim = self.ctx._cache.get(key)
        if prim is None or not prim.covers(min(qmin, e.lower), max(qmax, e.lower)):
            a, b = self.ctx.axis_range(e.var)
            lo = min(e.lower, qmin, a if math.isfinite(a) else qmin)
            hi = max(e.lower, qmax, b if math.isfinite(b) else qmax)
            if prim is not None:
                lo, hi = min(lo, prim.lo), max(hi, prim.hi)
            sample = self._sampler(e.body, e.var, cols, lines)
            feats = bump_features(e.body, e.var, self.omega, self.ctx)
            prim = LinePrimitive(sample, lo, e.lower, hi, self.omega, self.ctx.cfg,
                                 lines=lines.shape[0], features=feats)
            self.ctx._cache[key] = prim
        return prim(q, inv)

    def _integral(self, e):
        cols, lines, inv = self._lines(e.body, e.var)
        key = ("integral", e, self.omega, lines.tobytes(), lines.shape)
        totals = self.ctx._cache.get(key)
        if totals is None:
            one = np.zeros((1, self.X.shape[1]))
            lo = float(evaluate(e.lower, one, self.omega, self.ctx)[0])
            hi = float(evaluate(e.upper, one, self.omega, self.ctx)[0])
            sample = self._sampler(e.body, e.var, cols, lines)
            feats = bump_features(e.body, e.var, self.omega, self.ctx)
            totals = line_integral(sample, lo, hi, self.omega, self.ctx.cfg,
                                   lines=lines.shape[0], features=feats)
            self.ctx._cache[key] = totals
        return totals[inv]
