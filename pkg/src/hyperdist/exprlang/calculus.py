"""Symbolic partial derivatives and the bump-derivative prefactors."""

from functools import lru_cache
from itertools import product

import numpy as np
from numpy.polynomial import polynomial as P

from . import nodes as N


@lru_cache(maxsize=None)
def bump_prefactor(k):
    """Integer coefficients (ascending) of p_k with bump^(k)(u) = p_k(u) (1-u^2)^(-2k) bump(u).

    Follows from bump' = q' bump with q = -1/(1-u^2):
        p_{k+1} = (1-u^2) [p_k' (1-u^2) + 4k u p_k] - 2u p_k,   p_0 = 1.
    """
    if k == 0:
        return (1,)
    p = list(bump_prefactor(k - 1))
    km = k - 1
    one_minus = [1, 0, -1]
    dp = [i * c for i, c in enumerate(p)][1:] or [0]
    inner = _padd(_pmul(dp, one_minus), _pmul([0, 4 * km], p))
    nxt = _padd(_pmul(one_minus, inner), _pmul([0, -2], p))
    while len(nxt) > 1 and nxt[-1] == 0:
        nxt.pop()
    return tuple(nxt)


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return out


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


BUMP_EDGE = 1e-12


def bump_values(u, k=0):
    """k-th derivative of the bump at u (array), exactly 0 for |u| >= 1 - 1e-12."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(np.shape(u))
    inside = np.abs(u) < 1.0 - BUMP_EDGE
    if not np.any(inside):
        return out
    ui = u[inside]
    s = 1.0 - ui * ui
    if k == 0:
        out[inside] = np.exp(-1.0 / s)
        return out
    coeffs = np.array(bump_prefactor(k), dtype=float)
    # log-space combination keeps s^(-2k) from overflowing near the edge
    out[inside] = P.polyval(ui, coeffs) * np.exp(-1.0 / s - 2.0 * k * np.log(s))
    return out


def derivative(e, var):
    """d e / d x_var as a new Expr (folded)."""
    return _d(e, int(var))


@lru_cache(maxsize=1 << 16)
def _d(e, i):
    if i not in e.free:
        return N.ZERO
    if isinstance(e, N.Coord):
        return N.ONE if e.index == i else N.ZERO
    if isinstance(e, N.Add):
        return N.add(_d(e.a, i), _d(e.b, i))
    if isinstance(e, N.Sub):
        return N.sub(_d(e.a, i), _d(e.b, i))
    if isinstance(e, N.Neg):
        return N.neg(_d(e.a, i))
    if isinstance(e, N.Mul):
        return N.add(N.mul(_d(e.a, i), e.b), N.mul(e.a, _d(e.b, i)))
    if isinstance(e, N.Div):
        da, db = _d(e.a, i), _d(e.b, i)
        if N.is_const(db, 0.0):
            return N.div(da, e.b)
        return N.div(N.sub(N.mul(da, e.b), N.mul(e.a, db)), N.power(e.b, 2))
    if isinstance(e, N.Pow):
        return N.mul(N.mul(N.Const(e.n), N.power(e.a, e.n - 1)), _d(e.a, i))
    if isinstance(e, N.Sin):
        return N.mul(N.cos(e.a), _d(e.a, i))
    if isinstance(e, N.Cos):
        return N.neg(N.mul(N.sin(e.a), _d(e.a, i)))
    if isinstance(e, N.Exp):
        return N.mul(e, _d(e.a, i))
    if isinstance(e, N.Bump):
        return N.mul(N.bump_deriv(1, e.a), _d(e.a, i))
    if isinstance(e, N.BumpDeriv):
        return N.mul(N.bump_deriv(e.k + 1, e.a), _d(e.a, i))
    if isinstance(e, N.Antideriv):
        if e.var == i:
            return e.body
        return N.antideriv(_d(e.body, i), e.var, e.lower)
    if isinstance(e, N.Integral):
        # limits are coordinate-free, so only the integrand varies
        return N.integral(_d(e.body, i), e.var, e.lower, e.upper)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def differentiate(e, alpha):
    """Apply d^alpha, axis 1 first.  alpha is a sequence of nonnegative ints."""
    out = e
    for axis, order in enumerate(alpha, start=1):
        if order < 0:
            raise ValueError("multi-index entries must be >= 0")
        for _ in range(order):
            out = _d(out, axis)
    return out


def multi_indices(n, m):
    """All alpha in N^n with |alpha| <= m, ordered by |alpha|."""
    alphas = [a for a in product(range(m + 1), repeat=n) if sum(a) <= m]
    return sorted(alphas, key=lambda a: (sum(a), tuple(-v for v in a)))
