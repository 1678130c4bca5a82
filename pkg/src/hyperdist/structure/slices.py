"""Mollified slices and Vandermonde reconstruction of polynomial corrections."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..exprlang import (
    ZERO,
    Integral,
    NetFunction,
    OmegaScale,
    add,
    bump,
    div,
    mul,
    power,
    sub,
    x,
)
from ..exprlang.nodes import as_expr
from ..pairing import bump_integral

# mollifier scale M = ceil(omega**THETA)
THETA = 0.5
MIN_GAP = 0.1
COND_LIMIT = 1e8
SOLVE_TOL = 1e-10
DET_TOL = 1e-12


class ReconstructionError(ValueError):
    pass


@dataclass(frozen=True)
class SlicePoints:
    """Per axis, distinct standard points c_1..c_k inside (a, b), gaps >= 0.1 (b - a)."""

    points: tuple  # tuple of tuples
    intervals: tuple

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        for cs, (a, b) in zip(pts, self.intervals):
            if any(not a < c < b for c in cs):
                raise ReconstructionError("slice point outside its interval")
            s = sorted(cs)
            if any(t - u < MIN_GAP * (b - a) for u, t in zip(s, s[1:])):
                raise ReconstructionError("slice points closer than 0.1 of the axis length")

    @classmethod
    def default(cls, K, alpha):
        """Chebyshev points in the middle 60 % of each axis (equispaced if too crowded)."""
        pts = []
        for (a, b), k in zip(K.intervals, alpha):
            mid, half = 0.5 * (a + b), 0.3 * (b - a)
            cheb = sorted(mid + half * math.cos((2 * j + 1) * math.pi / (2 * k)) for j in range(k))
            gaps = np.diff(cheb)
            if k > 1 and gaps.min() < MIN_GAP * (b - a):
                cheb = list(np.linspace(mid - half, mid + half, k))
            pts.append(tuple(cheb))
        return cls(tuple(pts), K.intervals)


def mollifier_scale():
    return OmegaScale(THETA)


def mollified_slice(f, axis, c, domain=None, omega_min=None):
    """x~ -> integral of f(t, x~) psi_M(c - t) dt with M = ceil(omega**0.5).

    `f` is a NetFunction or an Expr.  The result is independent of x_axis.
    With `omega_min` the margin c +- 1/M(omega_min) is checked against the
    domain interval of the axis.
    """
    if isinstance(f, NetFunction):
        expr, domain = f.expr, f.domain if domain is None else domain
    else:
        expr = as_expr(f)
    c = float(c)
    M = mollifier_scale()
    if domain is not None and omega_min is not None:
        a, b = domain[axis - 1]
        width = 1.0 / math.ceil(omega_min ** THETA - 1e-12)
        if not (a < c - width and c + width < b):
            raise ReconstructionError(
                f"slice point {c:g} lacks the margin {width:g} inside ({a:g}, {b:g})")
    psi = div(mul(M, bump(mul(M, sub(c, x(axis))))), bump_integral())
    body = mul(expr, psi)
    half = div(1.0, M)
    slice_expr = Integral(body, axis, sub(c, half), add(c, half))
    if isinstance(f, NetFunction):
        return NetFunction(slice_expr, f.domain)
    return slice_expr


@dataclass
class PolynomialCorrection:
    """coefficients[i][j] multiplies x_{i+1}**j and does not depend on x_{i+1}."""

    coefficients: list
    points: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for i, coefs in enumerate(self.coefficients, start=1):
            for g in coefs:
                if i in g.free:
                    raise ReconstructionError(f"coefficient net depends on its own axis x{i}")

    def expression(self):
        total = ZERO
        for i, coefs in enumerate(self.coefficients, start=1):
            for j, g in enumerate(coefs):
                total = add(total, mul(g, power(x(i), j)))
        return total


def vandermonde_matrix(points):
    return np.vander(np.asarray(points, dtype=float), increasing=True)


def vandermonde_product(points):
    """prod_{i<j} (c_j - c_i)."""
    c = list(points)
    return math.prod(c[j] - c[i] for i in range(len(c)) for j in range(i + 1, len(c)))


@dataclass
class SolveInfo:
    det: float
    det_formula: float
    det_rel_error: float
    cond: float
    residual: float

    def to_dict(self):
        return dict(self.__dict__)


def _inverse(V, det_formula):
    cond = float(np.linalg.cond(V))
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise ReconstructionError(f"Vandermonde system too ill-conditioned (cond={cond:.3g})")
    det = float(np.linalg.det(V))
    rel = abs(det - det_formula) / abs(det_formula)
    Vinv = np.linalg.solve(V, np.eye(V.shape[0]))
    residual = float(np.max(np.abs(V @ Vinv - np.eye(V.shape[0]))))
    if residual > SOLVE_TOL:
        raise ReconstructionError(f"Vandermonde solve residual {residual:.3g} too large")
    return Vinv, SolveInfo(det, det_formula, rel, cond, residual)


def _combine(weights, nets):
    total = ZERO
    for w, s in zip(weights, nets):
        if w != 0.0:
            total = add(total, mul(float(w), s))
    return total


def vandermonde_reconstruct(slices, degree):
    """Coefficient nets g_j (j < degree) with sum_j g_j c_k**j = slice_k.

    `slices` is a list of (c_k, Expr or NetFunction); returns the list of
    coefficient Expressions (linear combinations of the slices) and the
    solve diagnostics.
    """
    if len(slices) != degree:
        raise ReconstructionError("need exactly `degree` slices")
    points = [float(c) for c, _ in slices]
    nets = [s.expr if isinstance(s, NetFunction) else as_expr(s) for _, s in slices]
    V = vandermonde_matrix(points)
    Vinv, info = _inverse(V, vandermonde_product(points))
    coefs = [_combine(Vinv[j], nets) for j in range(degree)]
    return coefs, info


def kronecker_reconstruct(points1, points2, values):
    """Coefficients h[j1][j2] with sum h[j1][j2] c_k**j1 d_l**j2 = values[k][l].

    The system matrix is kron(V1, V2); its determinant equals
    prod(c_j - c_i)**len(points2) * prod(d_j - d_i)**len(points1).
    """
    V = np.kron(vandermonde_matrix(points1), vandermonde_matrix(points2))
    formula = (vandermonde_product(points1) ** len(points2)
               * vandermonde_product(points2) ** len(points1))
    Vinv, info = _inverse(V, formula)
    flat = [v for row in values for v in row]
    coefs = [_combine(Vinv[r], flat) for r in range(V.shape[0])]
    n2 = len(points2)
    return [coefs[j1 * n2:(j1 + 1) * n2] for j1 in range(len(points1))], info


__all__ = [
    "PolynomialCorrection",
    "ReconstructionError",
    "SlicePoints",
    "SolveInfo",
    "kronecker_reconstruct",
    "mollified_slice",
    "mollifier_scale",
    "vandermonde_matrix",
    "vandermonde_product",
    "vandermonde_reconstruct",
]
