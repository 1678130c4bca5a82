import math

import numpy as np

from . import nodes as N
from .errors import DomainError
from .evaluate import EvalContext, evaluate
from .parser import parse


class NetFunction:
    """An expression over x1..xn together with its open box domain."""

    def __init__(self, expr, domain):
        self.expr = expr
        self.domain = tuple((float(a), float(b)) for a, b in domain)
        if not self.domain:
            raise ValueError("domain must have at least one axis")
        for a, b in self.domain:
            if not a < b:
                raise ValueError(f"empty domain interval ({a}, {b})")
        if N.max_coord(expr) > self.dim:
            raise ValueError(
                f"expression references x{N.max_coord(expr)} beyond dimension {self.dim}")

    @classmethod
    def parse(cls, source, domain):
        domain = tuple(domain)
        return cls(parse(source, len(domain)), domain)

    @property
    def dim(self):
        return len(self.domain)

    def with_expr(self, expr):
        return NetFunction(expr, self.domain)

    def context(self, cfg=None):
        return EvalContext(cfg, self.domain)

    def contains(self, points):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for i, (a, b) in enumerate(self.domain):
            ok &= (X[:, i] > a) & (X[:, i] < b)
        return ok

    def eval(self, points, omega, ctx=None):
        """Values at points (shape (Q, n) or (n,)); omega >= 1."""
        if omega < 1:
            raise ValueError("omega must be >= 1")
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected points with {self.dim} coordinates")
        if not np.all(self.contains(X)):
            raise DomainError("point outside the domain")
        return evaluate(self.expr, X, omega, ctx or self.context())

    def __repr__(self):
        dom = ", ".join(f"({a:g},{b:g})" for a, b in self.domain)
        return f"NetFunction({self.expr!r}, {dom})"


def whole_space(n):
    return tuple((-math.inf, math.inf) for _ in range(n))
