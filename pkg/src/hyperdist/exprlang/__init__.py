"""Expression language for omega-nets: parsing, serialization, differentiation, evaluation."""

from .calculus import bump_prefactor, bump_values, derivative, differentiate, multi_indices
from .errors import (
    DimensionError,
    DomainError,
    ExponentError,
    ExprError,
    ExprSyntaxError,
    UnknownIdentifier,
)
from .evaluate import EvalContext, bump_features, evaluate
from .net import NetFunction, whole_space
from .nodes import (
    OMEGA,
    ONE,
    ZERO,
    Add,
    Antideriv,
    Bump,
    BumpDeriv,
    Const,
    Coord,
    Cos,
    Div,
    Exp,
    Expr,
    Integral,
    Mul,
    Neg,
    Omega,
    OmegaScale,
    Pow,
    Sin,
    Sub,
    add,
    antideriv,
    as_expr,
    bump,
    bump_deriv,
    cos,
    div,
    exp,
    integral,
    mul,
    neg,
    power,
    sin,
    sub,
    total,
    x,
)
from .parser import parse
from .sexpr import parse_sexpr, serialize

__all__ = [
    "Add",
    "Antideriv",
    "Bump",
    "BumpDeriv",
    "Const",
    "Coord",
    "Cos",
    "DimensionError",
    "Div",
    "DomainError",
    "EvalContext",
    "Exp",
    "ExponentError",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "Integral",
    "Mul",
    "Neg",
    "NetFunction",
    "OMEGA",
    "ONE",
    "Omega",
    "OmegaScale",
    "Pow",
    "Sin",
    "Sub",
    "UnknownIdentifier",
    "ZERO",
    "add",
    "antideriv",
    "as_expr",
    "bump",
    "bump_deriv",
    "bump_features",
    "bump_prefactor",
    "bump_values",
    "cos",
    "derivative",
    "differentiate",
    "div",
    "evaluate",
    "exp",
    "integral",
    "mul",
    "multi_indices",
    "neg",
    "parse",
    "parse_sexpr",
    "power",
    "serialize",
    "sin",
    "sub",
    "total",
    "whole_space",
    "x",
]
