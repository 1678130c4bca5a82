"""Local structure of nets: corrected primitives, order reduction, decompositions, point values."""

from .cutoff import axis_bump, cutoff, inflated
from .pipeline import (
    Decomposition,
    MultiIndex,
    NotSContinuous,
    StructureError,
    corner_primitive,
    corrected_antiderivative,
    dirac_net,
    local_structure,
    point_value,
    polynomial_correction,
    primitive_order_zero,
    reduce_order,
    verify_decomposition,
    zero_local_structure,
)
from .slices import (
    PolynomialCorrection,
    ReconstructionError,
    SlicePoints,
    kronecker_reconstruct,
    mollified_slice,
    vandermonde_matrix,
    vandermonde_product,
    vandermonde_reconstruct,
)

__all__ = [
    "Decomposition",
    "MultiIndex",
    "NotSContinuous",
    "PolynomialCorrection",
    "ReconstructionError",
    "SlicePoints",
    "StructureError",
    "axis_bump",
    "corner_primitive",
    "corrected_antiderivative",
    "cutoff",
    "dirac_net",
    "inflated",
    "kronecker_reconstruct",
    "local_structure",
    "mollified_slice",
    "point_value",
    "polynomial_correction",
    "primitive_order_zero",
    "reduce_order",
    "vandermonde_matrix",
    "vandermonde_product",
    "vandermonde_reconstruct",
    "verify_decomposition",
    "zero_local_structure",
]
