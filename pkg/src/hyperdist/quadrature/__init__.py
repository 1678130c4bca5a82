"""Quadrature over boxes and along axes, tuned for integrands oscillating at frequency ~omega."""

from .box import CompactBox
from .rules import (
    LinePrimitive,
    QuadratureConfig,
    QuadratureError,
    ResolutionError,
    composite,
    gauss_legendre,
    line_integral,
)

_OPS = {
    "BoxIntegral",
    "derivative_sup",
    "integrate_box",
    "integrate_box_detailed",
    "primitive_eval",
    "seminorm",
    "seminorm_profile",
    "sup_grid",
}


def __getattr__(name):
    # ops depends on exprlang, which itself imports .rules; load it lazily
    if name in _OPS:
        from . import ops
        return getattr(ops, name)
    raise AttributeError(name)

__all__ = [
    "CompactBox",
    "LinePrimitive",
    "QuadratureConfig",
    "QuadratureError",
    "ResolutionError",
    "composite",
    "gauss_legendre",
    "line_integral",
    *sorted(_OPS),
]
