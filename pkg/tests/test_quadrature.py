import math

import mpmath
import numpy as np
import pytest
from conftest import smooth_exprs
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperdist.exprlang import (
    EvalContext,
    NetFunction,
    bump_prefactor,
    bump_values,
    derivative,
    evaluate,
    mul,
    parse,
)
from hyperdist.quadrature import (
    CompactBox,
    LinePrimitive,
    QuadratureConfig,
    ResolutionError,
    composite,
    gauss_legendre,
    integrate_box,
    integrate_box_detailed,
    line_integral,
    primitive_eval,
    seminorm,
    seminorm_profile,
    sup_grid,
)
from hyperdist.quadrature.ops import fast_axes
from hyperdist.quadrature.rules import graded_edges, with_features

SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])
K1 = CompactBox((-1.0,), (1.0,))
BUMP_MAX = math.exp(-1)


def box(*intervals):
    return CompactBox.from_intervals(intervals)


# rules

@pytest.mark.parametrize("order", [2, 4, 8, 12])
def test_gauss_legendre_exact_to_degree_2n_minus_1(order):
    t, w = gauss_legendre(order)
    for k in range(2 * order):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.dot(w, t ** k) == pytest.approx(exact, abs=1e-14)


def test_composite_rule_integrates_exponential():
    nodes, weights = composite(0.0, 2.0, 16, 8)
    assert np.dot(weights, np.exp(nodes)) == pytest.approx(math.expm1(2.0), rel=1e-14)


def test_graded_edges_are_monotone_and_clustered():
    e = graded_edges(0.0, 1.0, 16)
    assert e[0] == 0.0 and e[-1] == 1.0
    assert np.all(np.diff(e) > 0)
    assert np.diff(e)[0] < np.diff(e)[8]


def test_with_features_keeps_range_and_refines_feature():
    edges = np.linspace(-1, 1, 9)
    out = with_features(edges, [(0.1, 0.2)], 8, level=1)
    assert out[0] == -1.0 and out[-1] == 1.0
    assert np.all(np.diff(out) > 0)
    inside = np.count_nonzero((out > 0.1) & (out < 0.2))
    assert inside >= 7


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(base_nodes=0)
    cfg = QuadratureConfig()
    assert cfg.nodes_per_axis(2.0, 4.0) == 64
    assert cfg.nodes_per_axis(2.0, 64.0) == 512


# box integrals

def test_sine_over_zero_pi_at_omega_16():
    v = integrate_box(parse("sin(omega*x)", 1), box((0.0, math.pi)), 16.0)
    assert v == pytest.approx((1 - math.cos(16 * math.pi)) / 16, abs=1e-9)
    assert abs(v) <= 1e-9


@pytest.mark.parametrize("omega", [16.0, 256.0, 4096.0])
def test_oscillatory_moment_matches_mpmath(omega):
    f = parse("x^2*cos(omega*x)*exp(x)", 1)
    mpmath.mp.dps = 30
    ref = mpmath.quad(lambda t: t ** 2 * mpmath.cos(omega * t) * mpmath.exp(t),
                      mpmath.linspace(-1, 1, int(omega // 4) + 2))
    assert integrate_box(f, K1, omega) == pytest.approx(float(ref), abs=1e-10)


def test_two_dimensional_product_integral():
    f = parse("cos(omega*x)*exp(y)", 2)
    K = box((-1.0, 0.5), (0.0, 1.0))
    w = 64.0
    exact = (math.sin(0.5 * w) + math.sin(w)) / w * (math.e - 1)
    res = integrate_box_detailed(f, K, w)
    assert res.value == pytest.approx(exact, abs=1e-11)
    assert res.nodes <= QuadratureConfig().node_cap


@pytest.mark.parametrize("omega", [16.0, 1024.0, 4096.0])
def test_dirac_net_has_unit_mass(omega):
    c, _ = quad(lambda t: math.exp(-1 / (1 - t * t)), -1, 1, epsabs=1e-14, epsrel=1e-14)
    f = NetFunction.parse(f"omega*bump(omega*x)/{c!r}", ((-2.0, 2.0),))
    assert integrate_box(f, K1, omega) == pytest.approx(1.0, abs=1e-10)


def test_fast_axes_detection():
    assert fast_axes(parse("omega^2*sin(y)*exp(x)", 2)) == set()
    assert fast_axes(parse("omega*sin(omega*y)*exp(x)", 2)) == {2}
    assert fast_axes(parse("bump(omega*x)*cos(y)", 2)) == {1}
    assert fast_axes(parse("1/(1+omega*x^2)", 2)) == {1}
    assert fast_axes(parse("(omega*y+2)^-2", 2)) == {2}


def test_slow_axis_is_not_refined():
    # f(x, y) = g(y): only y oscillates, so a 2D box at omega=256 stays under the node cap
    f = parse("omega^-1*sin(omega*y)*cos(x)", 2)
    K = box((-0.8, 0.8), (-0.8, 0.8))
    res = integrate_box_detailed(f, K, 256.0)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    g = parse("cos(omega*y)*cos(x)", 2)
    exact = 2 * math.sin(0.8) * 2 * math.sin(0.8 * 256) / 256
    assert integrate_box(g, K, 256.0) == pytest.approx(exact, abs=1e-11)


def test_box_outside_domain_is_rejected():
    f = NetFunction.parse("x", ((-1.0, 1.0),))
    with pytest.raises(ValueError):
        integrate_box(f, box((0.0, 1.5)), 16.0)


def test_node_cap_raises_resolution_error():
    cfg = QuadratureConfig(node_cap=2 ** 10)
    with pytest.raises(ResolutionError):
        integrate_box(parse("sin(omega*x)*sin(omega*y)", 2), box((-1, 1), (-1, 1)), 256.0, cfg)


@SETTINGS
@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([16.0, 64.0, 256.0]))
def test_linearity(a, b, omega):
    f = parse("omega*sin(omega*x)*cos(x)", 1)
    g = parse("bump(x/2)*exp(x)", 1)
    combo = parse(f"({a!r})*omega*sin(omega*x)*cos(x) + ({b!r})*bump(x/2)*exp(x)", 1)
    lhs = integrate_box(combo, K1, omega)
    rhs = a * integrate_box(f, K1, omega) + b * integrate_box(g, K1, omega)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@SETTINGS
@given(st.integers(0, 3), st.floats(-0.4, 0.4), st.floats(0.2, 0.5), st.floats(-3, 3),
       st.sampled_from([16.0, 32.0, 128.0, 256.0]))
def test_integration_by_parts(k, center, radius, phase, omega):
    f = parse(f"omega^{k}*sin(omega*x + {phase!r})*exp(x/3)", 1)
    phi = parse(f"bump((x - ({center!r}))/{radius!r})", 1)
    lhs = integrate_box(mul(derivative(f, 1), phi), K1, omega)
    rhs = -integrate_box(mul(f, derivative(phi, 1)), K1, omega)
    assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs) + abs(rhs))


# primitives

def test_primitive_cosine_closed_form():
    v = primitive_eval(parse("cos(omega*x)", 1), 1, 0.0, 0.7, [], 32.0)
    assert v == pytest.approx(math.sin(32 * 0.7) / 32, abs=1e-9)


def test_primitive_empty_and_linear():
    assert primitive_eval(parse("sin(x)", 1), 1, 0.3, 0.3, [], 16.0) == 0.0
    assert primitive_eval(parse("1", 1), 1, 0.0, 1.7, [], 16.0) == pytest.approx(1.7, abs=1e-14)
    assert primitive_eval(parse("1", 1), 1, 1.7, 0.0, [], 16.0) == pytest.approx(-1.7, abs=1e-14)


def test_primitive_in_second_axis():
    v = primitive_eval(parse("x*cos(y)", 2), 2, 0.0, 1.0, [3.0], 16.0)
    assert v == pytest.approx(3 * math.sin(1.0), abs=1e-12)


@SETTINGS
@given(smooth_exprs(dim=1, max_leaves=5), st.floats(-1, 0), st.floats(0, 1),
       st.sampled_from([1.0, 16.0]))
def test_fundamental_theorem(F, lo, hi, omega):
    ends = evaluate(F, np.array([[lo], [hi]]), omega)
    if not np.all(np.isfinite(ends)) or np.max(np.abs(ends)) > 1e6:
        return
    try:
        got = primitive_eval(derivative(F, 1), 1, lo, hi, [], omega)
    except ResolutionError:
        return
    assert abs(got - (ends[1] - ends[0])) <= 1e-8 * (1 + np.max(np.abs(ends)))


def test_line_primitive_is_anchored_and_cumulative():
    w = 64.0
    cfg = QuadratureConfig()
    prim = LinePrimitive(lambda t: np.cos(w * t)[None, :], -1.0, 0.25, 1.0, w, cfg)
    q = np.linspace(-1, 1, 41)
    # interior points use the panel interpolant: accurate to the 1e-9 primitive budget
    np.testing.assert_allclose(prim(q), (np.sin(w * q) - math.sin(w * 0.25)) / w,
                               rtol=0, atol=1e-9)
    assert prim(np.array([0.25]))[0] == pytest.approx(0.0, abs=1e-15)


def test_line_integral_family():
    vals = line_integral(lambda t: np.stack([t, t ** 2]), 0.0, 2.0, 16.0, QuadratureConfig(),
                         lines=2)
    np.testing.assert_allclose(vals, [2.0, 8.0 / 3.0], rtol=1e-13)


# sup norms and seminorms

def test_seminorm_of_bump_order_zero():
    v, _ = seminorm(parse("bump(x)", 1), K1, 0, 16.0)
    assert v == pytest.approx(BUMP_MAX, abs=1e-6)


def test_seminorm_of_modulated_bump_approaches_envelope():
    v, _ = seminorm(parse("sin(omega*x)*bump(x)", 1), K1, 0, 256.0)
    dense = np.linspace(-1, 1, 10 ** 6 + 1)
    oracle = np.max(np.abs(np.sin(256 * dense) * bump_values(dense)))
    assert BUMP_MAX - 1e-3 <= v <= 0.3679
    assert v == pytest.approx(oracle, abs=1e-4)


def test_seminorm_first_order_matches_dense_search():
    v, _ = seminorm(parse("bump(x)", 1), K1, 1, 16.0)
    dense = np.linspace(-1, 1, 10 ** 6 + 1)
    oracle = np.max(np.abs(bump_values(dense, 1)))
    # sampled sup: spacing h misses the peak by ~ |f''| h^2 / 8
    X, _ = sup_grid(K1, 16.0)
    h = X[1, 0] - X[0, 0]
    curvature = np.max(np.abs(bump_values(dense, 3)))
    assert oracle - curvature * h ** 2 / 8 <= v <= oracle
    assert v == pytest.approx(oracle, rel=1e-3)
    # the peak solves bump'' = 0, i.e. a root of the second prefactor polynomial
    peak = dense[np.argmax(np.abs(bump_values(dense, 1)))]
    roots = np.roots(bump_prefactor(2)[::-1])
    root = max(r.real for r in roots if abs(r.imag) < 1e-12 and 0 < r.real < 1)
    assert abs(abs(peak) - root) < 1e-5


@pytest.mark.parametrize("src", ["bump(x)", "sin(omega*x)*bump(x)", "bump(2*x)*exp(x)"])
def test_seminorm_monotone_in_order(src):
    profile, _ = seminorm_profile(parse(src, 1), K1, 4, 32.0)
    assert all(b >= a for a, b in zip(profile, profile[1:]))


def test_sup_grid_density_and_caps():
    X, axes = sup_grid(K1, 16.0)
    assert len(axes[0]) >= 4 * 32 * 2 * 2
    X2, _ = sup_grid(box((-1, 1), (-1, 1)), 4096.0)
    assert X2.shape[0] <= 2 ** 18


def test_context_cache_does_not_change_values():
    e = parse("bump(omega*x)", 1)
    ctx = EvalContext()
    a = integrate_box(e, K1, 64.0, ctx=ctx)
    b = integrate_box(e, K1, 64.0, ctx=ctx)
    assert a == b


# boxes

def test_box_geometry():
    K = box((-1.0, 1.0), (0.0, 2.0))
    assert K.dim == 2 and K.volume == 4.0 and K.center == (0.0, 1.0)
    big = K.inflate(0.25)
    assert big.intervals == ((-1.25, 1.25), (-0.25, 2.25))
    assert big.contains_box(K, strict=True)
    clipped = big.clip(((-1.2, 1.2), (-5.0, 5.0)))
    assert clipped.inside(((-1.2, 1.2), (-5.0, 5.0)))
    with pytest.raises(ValueError):
        box((1.0, 0.0))
