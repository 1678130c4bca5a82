"""Smooth cutoffs and the normalized bumps the constructions need."""

import math
from functools import lru_cache

from ..exprlang import Antideriv, bump, div, mul, neg, sub, x
from ..pairing import bump_integral


def axis_bump(axis, center, radius):
    """Normalized bump in the single coordinate x_axis: integral 1 over its support."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return div(bump(div(sub(x(axis), float(center)), float(radius))),
               bump_integral() * float(radius))


def _edge(axis, start, stop):
    """Primitive of a normalized bump on [start, stop]: 0 before start, 1 after stop."""
    mid, half = 0.5 * (start + stop), 0.5 * (stop - start)
    return Antideriv(axis_bump(axis, mid, half), axis, float(start))


@lru_cache(maxsize=256)
def _cutoff_cached(inner, outer):
    expr = None
    for axis, ((a, b), (a2, b2)) in enumerate(zip(inner.intervals, outer.intervals), start=1):
        rise = _edge(axis, a2, a)
        # falling edge: integral from x to b2 of the mirrored bump
        fall = neg(_edge_from_right(axis, b, b2))
        factor = mul(rise, fall)
        expr = factor if expr is None else mul(expr, factor)
    return expr


def _edge_from_right(axis, start, stop):
    mid, half = 0.5 * (start + stop), 0.5 * (stop - start)
    return Antideriv(axis_bump(axis, mid, half), axis, float(stop))


def cutoff(inner, outer):
    """Smooth tensor cutoff equal to 1 on `inner` and vanishing outside `outer`.

    Each axis factor is the product of a rising and a falling smoothstep, each
    the primitive of a normalized bump spread over the gap between the boxes.
    The plateau equals 1 up to quadrature accuracy (~1e-12).
    """
    if not outer.contains_box(inner, strict=True):
        raise ValueError("cutoff needs the inner box strictly inside the outer box")
    return _cutoff_cached(inner, outer)


def inflated(K, domain, fraction=0.25):
    """K' with K strictly inside int K': K grown by `fraction` and clipped into the domain."""
    if not K.inside(domain, strict=True):
        raise ValueError("K touches the boundary of the domain; shrink K")
    Kp = K.inflate(fraction).clip(domain)
    if not Kp.contains_box(K, strict=True):
        raise ValueError("no room for an enlarged box around K; shrink K")
    return Kp


def default_phi0_params(domain, axis):
    """(center, radius) of the default phi0 on an axis of the domain."""
    a, b = domain[axis - 1]
    if math.isfinite(a) and math.isfinite(b):
        return 0.5 * (a + b), 0.25 * (b - a)
    if not math.isfinite(a) and not math.isfinite(b):
        return 0.0, 1.0
    if math.isfinite(a):
        return a + 2.0, 1.0
    return b - 2.0, 1.0
