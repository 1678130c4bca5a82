"""Immutable expression nodes for omega-parametrized nets of smooth functions.

Every node hashes and compares structurally.  Hashes and free-variable sets
are cached on first use so that derivative trees, which share subtrees
heavily, stay cheap to memoize on.
"""

import math


class Expr:
    __slots__ = ("_h", "_free", "_omega")

    def _key(self):
        raise NotImplementedError

    def children(self):
        return ()

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            self._h = h
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    @property
    def free(self):
        """Coordinate indices (1-based) the value depends on."""
        try:
            return self._free
        except AttributeError:
            s = frozenset()
            for c in self.children():
                s |= c.free
            self._free = s
            return s

    @property
    def has_omega(self):
        try:
            return self._omega
        except AttributeError:
            v = any(c.has_omega for c in self.children())
            self._omega = v
            return v

    def __repr__(self):
        from .sexpr import serialize
        return f"Expr<{serialize(self)}>"

    # arithmetic sugar; routes through the folding constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def _key(self):
        # distinguishes 0.0 from -0.0 so round-trips stay bit-exact
        return (self.value, math.copysign(1.0, self.value))


class Coord(Expr):
    __slots__ = ("index",)

    def __init__(self, index):
        if int(index) < 1:
            raise ValueError("coordinate indices start at 1")
        self.index = int(index)

    def _key(self):
        return (self.index,)

    @property
    def free(self):
        return frozenset((self.index,))


class Omega(Expr):
    __slots__ = ()

    def _key(self):
        return ()

    @property
    def has_omega(self):
        return True


class OmegaScale(Expr):
    """ceil(omega ** theta); an integer-valued slowly growing scale."""

    __slots__ = ("theta",)

    def __init__(self, theta):
        self.theta = float(theta)

    def _key(self):
        return (self.theta,)

    @property
    def has_omega(self):
        return True


class Binary(Expr):
    __slots__ = ("a", "b")
    op = "?"

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def _key(self):
        return (self.a, self.b)

    def children(self):
        return (self.a, self.b)


class Add(Binary):
    __slots__ = ()
    op = "+"


class Sub(Binary):
    __slots__ = ()
    op = "-"


class Mul(Binary):
    __slots__ = ()
    op = "*"


class Div(Binary):
    __slots__ = ()
    op = "/"


class Unary(Expr):
    __slots__ = ("a",)
    op = "?"

    def __init__(self, a):
        self.a = a

    def _key(self):
        return (self.a,)

    def children(self):
        return (self.a,)


class Neg(Unary):
    __slots__ = ()
    op = "neg"


class Sin(Unary):
    __slots__ = ()
    op = "sin"


class Cos(Unary):
    __slots__ = ()
    op = "cos"


class Exp(Unary):
    __slots__ = ()
    op = "exp"


class Bump(Unary):
    """exp(-1/(1-u^2)) for |u| < 1, zero elsewhere."""

    __slots__ = ()
    op = "bump"


class Pow(Expr):
    __slots__ = ("a", "n")

    def __init__(self, a, n):
        if int(n) != n:
            raise ValueError("non-integer exponent")
        self.a = a
        self.n = int(n)

    def _key(self):
        return (self.a, self.n)

    def children(self):
        return (self.a,)


class BumpDeriv(Expr):
    __slots__ = ("k", "a")

    def __init__(self, k, a):
        if int(k) < 1:
            raise ValueError("bump_deriv order must be >= 1")
        self.k = int(k)
        self.a = a

    def _key(self):
        return (self.k, self.a)

    def children(self):
        return (self.a,)


class Antideriv(Expr):
    """x_var -> integral of body from `lower` to x_var, other coordinates fixed."""

    __slots__ = ("body", "var", "lower")

    def __init__(self, body, var, lower):
        self.body = body
        self.var = int(var)
        self.lower = float(lower)

    def _key(self):
        return (self.body, self.var, self.lower)

    def children(self):
        return (self.body,)

    @property
    def free(self):
        try:
            return self._free
        except AttributeError:
            self._free = self.body.free | {self.var}
            return self._free


class Integral(Expr):
    """Definite integral of body over x_var in [lower, upper].

    The limits are coordinate-free expressions (they may depend on omega);
    the result does not depend on x_var.
    """

    __slots__ = ("body", "var", "lower", "upper")

    def __init__(self, body, var, lower, upper):
        lower, upper = as_expr(lower), as_expr(upper)
        if lower.free or upper.free:
            raise ValueError("integral limits must not depend on coordinates")
        self.body = body
        self.var = int(var)
        self.lower = lower
        self.upper = upper

    def _key(self):
        return (self.body, self.var, self.lower, self.upper)

    def children(self):
        return (self.body, self.lower, self.upper)

    @property
    def free(self):
        try:
            return self._free
        except AttributeError:
            self._free = self.body.free - {self.var}
            return self._free


ZERO = Const(0.0)
ONE = Const(1.0)
OMEGA = Omega()


def as_expr(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return Const(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def x(i):
    return Coord(i)


def is_const(e, value=None):
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# --- folding constructors -------------------------------------------------
# Constant folding plus the neutral/absorbing element rules; nothing else.

def add(a, b):
    a, b = as_expr(a), as_expr(b)
    if is_const(a) and is_const(b):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a, b):
    a, b = as_expr(a), as_expr(b)
    if is_const(a) and is_const(b):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def neg(a):
    a = as_expr(a)
    if is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    if is_const(a) and is_const(b):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    if is_const(b, 0.0):
        raise ZeroDivisionError("division by constant zero")
    if is_const(a) and is_const(b):
        return Const(a.value / b.value)
    if is_const(a, 0.0):
        return ZERO
    if is_const(b, 1.0):
        return a
    return Div(a, b)


def power(a, n):
    a = as_expr(a)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if is_const(a):
        return Const(a.value ** n)
    return Pow(a, n)


def sin(a):
    a = as_expr(a)
    return Const(math.sin(a.value)) if is_const(a) else Sin(a)


def cos(a):
    a = as_expr(a)
    return Const(math.cos(a.value)) if is_const(a) else Cos(a)


def exp(a):
    a = as_expr(a)
    return Const(math.exp(a.value)) if is_const(a) else Exp(a)


def bump(a):
    return Bump(as_expr(a))


def bump_deriv(k, a):
    return BumpDeriv(k, as_expr(a))


def antideriv(body, var, lower):
    body = as_expr(body)
    if is_const(body, 0.0):
        return ZERO
    return Antideriv(body, var, lower)


def integral(body, var, lower, upper):
    body = as_expr(body)
    if is_const(body, 0.0):
        return ZERO
    return Integral(body, var, lower, upper)


def total(terms):
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


def walk(e):
    """Yield every distinct node of the DAG once."""
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(n.children())


def max_coord(e):
    return max(e.free, default=0)


def contains_integration(e):
    return any(isinstance(n, (Antideriv, Integral)) for n in walk(e))
