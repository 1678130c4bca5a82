"""Recursive-descent parser for the infix expression language.

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := ['-' | '+'] INTEGER | '(' ['-' | '+'] INTEGER ')'
    atom     := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

Identifiers are x1..xn, omega, and the aliases x, y, z when n <= 3.
Functions: sin, cos, exp, bump.
"""

import re

from . import nodes as N
from .errors import DimensionError, ExponentError, ExprSyntaxError, UnknownIdentifier

_FUNCS = {"sin": N.Sin, "cos": N.Cos, "exp": N.Exp, "bump": N.Bump}
_ALIASES = {"x": 1, "y": 2, "z": 3}

_SCAN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _lex(source):
    pos = 0
    out = []
    while pos < len(source):
        m = _SCAN.match(source, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source, dimension):
        self.toks = _lex(source)
        self.i = 0
        self.dim = dimension

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = N.Add(e, rhs) if op == "+" else N.Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = N.Mul(e, rhs) if op == "*" else N.Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return N.Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return N.Pow(base, self.exponent())
        return base

    def exponent(self):
        paren = False
        if self.peek()[:2] == ("op", "("):
            self.take()
            paren = True
        sign = 1
        if self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = -1 if self.take()[1] == "-" else 1
        kind, val, pos = self.take()
        if kind != "num":
            raise ExponentError("non-integer exponent", pos)
        if not re.fullmatch(r"\d+", val):
            raise ExponentError(f"non-integer exponent {val}", pos)
        if paren:
            self.expect(")")
        return sign * int(val)

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return N.Const(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if val in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCS[val](arg)
            if val == "omega":
                return N.Omega()
            return N.Coord(self.coordinate(val, pos))
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)

    def coordinate(self, name, pos):
        m = re.fullmatch(r"x([1-9][0-9]*)", name)
        if m:
            idx = int(m.group(1))
        elif name in _ALIASES and self.dim <= 3:
            idx = _ALIASES[name]
        else:
            raise UnknownIdentifier(f"unknown identifier {name!r}", pos)
        if idx > self.dim:
            raise DimensionError(f"coordinate {name!r} exceeds dimension {self.dim}", pos)
        return idx


def parse(source, dimension=1):
    """Parse infix source text into an Expr over coordinates x1..x_dimension."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    return _Parser(source, dimension).parse()
