"""Canonical prefix s-expression text format.

    (* (^ omega 2) (sin (* omega x1)))
    (antideriv <expr> <var-index> <lower-limit>)
    (integral <expr> <var-index> <lower-expr> <upper-expr>)

Constants are written with 17 significant digits, which round-trips every
double exactly.
"""

import re

from . import nodes as N
from .errors import ExprSyntaxError

_BINARY = {"+": N.Add, "-": N.Sub, "*": N.Mul, "/": N.Div}
_UNARY = {"neg": N.Neg, "sin": N.Sin, "cos": N.Cos, "exp": N.Exp, "bump": N.Bump}


def format_number(v):
    s = format(float(v), ".17g")
    if s in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot serialize non-finite constant {v}")
    return s


def serialize(e):
    out = []
    _emit(e, out)
    return "".join(out)


def _emit(e, out):
    if isinstance(e, N.Const):
        out.append(format_number(e.value))
    elif isinstance(e, N.Coord):
        out.append(f"x{e.index}")
    elif isinstance(e, N.Omega):
        out.append("omega")
    elif isinstance(e, N.OmegaScale):
        out.append(f"(oscale {format_number(e.theta)})")
    elif isinstance(e, N.Binary):
        out.append(f"({e.op} ")
        _emit(e.a, out)
        out.append(" ")
        _emit(e.b, out)
        out.append(")")
    elif isinstance(e, N.Unary):
        out.append(f"({e.op} ")
        _emit(e.a, out)
        out.append(")")
    elif isinstance(e, N.Pow):
        out.append("(^ ")
        _emit(e.a, out)
        out.append(f" {e.n})")
    elif isinstance(e, N.BumpDeriv):
        out.append(f"(bump_deriv {e.k} ")
        _emit(e.a, out)
        out.append(")")
    elif isinstance(e, N.Antideriv):
        out.append("(antideriv ")
        _emit(e.body, out)
        out.append(f" {e.var} {format_number(e.lower)})")
    elif isinstance(e, N.Integral):
        out.append("(integral ")
        _emit(e.body, out)
        out.append(f" {e.var} ")
        _emit(e.lower, out)
        out.append(" ")
        _emit(e.upper, out)
        out.append(")")
    else:
        raise TypeError(f"unknown node {type(e).__name__}")


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError("unexpected character", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


def parse_sexpr(text):
    """Parse the canonical format back into an Expr (inverse of serialize)."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExprSyntaxError("empty input", 0)
    expr, i = _read(tokens, 0)
    if i != len(tokens):
        raise ExprSyntaxError("trailing input", tokens[i][1])
    return expr


def _atom(tok, pos):
    if tok == "omega":
        return N.Omega()
    if re.fullmatch(r"x[1-9][0-9]*", tok):
        return N.Coord(int(tok[1:]))
    try:
        return N.Const(float(tok))
    except ValueError:
        raise ExprSyntaxError(f"unknown atom {tok!r}", pos) from None


def _int(tokens, i):
    tok, pos = tokens[i]
    try:
        return int(tok), i + 1
    except ValueError:
        raise ExprSyntaxError(f"expected integer, got {tok!r}", pos) from None


def _float(tokens, i):
    tok, pos = tokens[i]
    try:
        return float(tok), i + 1
    except ValueError:
        raise ExprSyntaxError(f"expected number, got {tok!r}", pos) from None


def _read(tokens, i):
    if i >= len(tokens):
        raise ExprSyntaxError("unexpected end of input", tokens[-1][1] if tokens else 0)
    tok, pos = tokens[i]
    if tok == ")":
        raise ExprSyntaxError("unexpected ')'", pos)
    if tok != "(":
        return _atom(tok, pos), i + 1
    if i + 1 >= len(tokens):
        raise ExprSyntaxError("unexpected end of input", pos)
    op, op_pos = tokens[i + 1]
    i += 2
    try:
        if op in _BINARY:
            a, i = _read(tokens, i)
            b, i = _read(tokens, i)
            e = _BINARY[op](a, b)
        elif op in _UNARY:
            a, i = _read(tokens, i)
            e = _UNARY[op](a)
        elif op == "^":
            a, i = _read(tokens, i)
            n, i = _int(tokens, i)
            e = N.Pow(a, n)
        elif op == "bump_deriv":
            k, i = _int(tokens, i)
            a, i = _read(tokens, i)
            e = N.BumpDeriv(k, a)
        elif op == "oscale":
            theta, i = _float(tokens, i)
            e = N.OmegaScale(theta)
        elif op == "antideriv":
            body, i = _read(tokens, i)
            var, i = _int(tokens, i)
            lower, i = _float(tokens, i)
            e = N.Antideriv(body, var, lower)
        elif op == "integral":
            body, i = _read(tokens, i)
            var, i = _int(tokens, i)
            lo, i = _read(tokens, i)
            hi, i = _read(tokens, i)
            e = N.Integral(body, var, lo, hi)
        else:
            raise ExprSyntaxError(f"unknown operator {op!r}", op_pos)
    except IndexError:
        raise ExprSyntaxError("unexpected end of input", op_pos) from None
    except ValueError as exc:
        raise ExprSyntaxError(str(exc), op_pos) from None
    if i >= len(tokens) or tokens[i][0] != ")":
        raise ExprSyntaxError("expected ')'", tokens[i][1] if i < len(tokens) else pos)
    return e, i + 1
