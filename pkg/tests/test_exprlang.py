import math

import mpmath
import numpy as np
import pytest
from conftest import any_exprs, central_difference, smooth_exprs
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperdist.exprlang import (
    DimensionError,
    DomainError,
    EvalContext,
    ExponentError,
    ExprSyntaxError,
    NetFunction,
    UnknownIdentifier,
    add,
    antideriv,
    bump_features,
    bump_prefactor,
    bump_values,
    derivative,
    differentiate,
    div,
    evaluate,
    integral,
    mul,
    multi_indices,
    neg,
    parse,
    parse_sexpr,
    serialize,
    x,
)
from hyperdist.exprlang import nodes as N

SETTINGS = settings(max_examples=60, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


def ev(e, pts, omega=1.0):
    return evaluate(e, np.atleast_2d(np.asarray(pts, dtype=float)), omega)


def mp_bump(u):
    u = mpmath.mpf(u)
    return mpmath.exp(-1 / (1 - u * u)) if abs(u) < 1 else mpmath.mpf(0)


# parsing

def test_parse_power_times_sine():
    e = parse("omega^2*sin(omega*x)", 1)
    expected = N.Mul(N.Pow(N.Omega(), 2), N.Sin(N.Mul(N.Omega(), N.Coord(1))))
    assert e == expected


def test_parse_bump_plus_constant():
    assert parse("bump(x)+1", 1) == N.Add(N.Bump(N.Coord(1)), N.Const(1.0))


def test_non_integer_exponent_rejected():
    with pytest.raises(ExponentError, match="non-integer exponent"):
        parse("x^1.5", 1)


def test_negative_exponent_forms():
    assert parse("omega^-1", 1) == N.Pow(N.Omega(), -1)
    assert parse("omega^(-2)", 1) == N.Pow(N.Omega(), -2)


def test_precedence_and_associativity():
    assert parse("-x^2", 1) == N.Neg(N.Pow(N.Coord(1), 2))
    assert ev(parse("2-3-4", 1), [[0.0]])[0] == -5.0
    assert ev(parse("8/2/2", 1), [[0.0]])[0] == 2.0
    assert ev(parse("1+2*3", 1), [[0.0]])[0] == 7.0


def test_aliases_and_indexed_coordinates():
    assert parse("x+y+z", 3) == parse("x1+x2+x3", 3)
    with pytest.raises(UnknownIdentifier):
        parse("y", 4)
    assert parse("x4", 4) == N.Coord(4)


def test_dimension_error_reports_position():
    with pytest.raises(DimensionError) as info:
        parse("sin(x) + y", 1)
    assert info.value.position == 9


@pytest.mark.parametrize("src", ["sin(x", "x +", "foo(x)", "x $ 2", "", "(x))", "x^y"])
def test_malformed_sources(src):
    with pytest.raises(ExprSyntaxError):
        parse(src, 1)


# serialization

@SETTINGS
@given(any_exprs())
def test_serialize_round_trip(e):
    text = serialize(e)
    back = parse_sexpr(text)
    assert back == e
    assert serialize(back) == text


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_constants_round_trip_bit_exact(v):
    back = parse_sexpr(serialize(N.Const(v)))
    assert back.value == v
    assert math.copysign(1.0, back.value) == math.copysign(1.0, v)


def test_non_finite_constant_not_serializable():
    with pytest.raises(ValueError):
        serialize(N.Const(math.inf))


# folding constructors

def test_identity_folding():
    assert add(x(1), 0) == x(1)
    assert mul(x(1), 1) == x(1)
    assert mul(x(1), 0) == N.ZERO
    assert div(x(1), 1.0) == x(1)
    assert neg(neg(x(1))) == x(1)
    assert add(2.0, 3.0) == N.Const(5.0)


def test_operator_sugar_accepts_numbers():
    e = 2 * x(1) + 1
    assert ev(e, [[1.5]])[0] == 4.0
    assert ev(x(1) / 4.0, [[2.0]])[0] == 0.5


# differentiation

def test_derivative_of_sine_of_omega_x():
    d = derivative(parse("sin(omega*x)", 1), 1)
    X = np.linspace(-1, 1, 11)[:, None]
    for w in (1.0, 16.0):
        np.testing.assert_allclose(ev(d, X, w), w * np.cos(w * X[:, 0]), rtol=0, atol=1e-14)


def test_derivative_of_antiderivative_is_body():
    f = parse("x1*cos(omega*x2)", 2)
    assert differentiate(antideriv(f, 1, 0.3), (1, 0)) == f


def test_bump_second_derivative_at_center():
    d2 = differentiate(N.Bump(N.Coord(1)), (2,))
    assert d2 == N.BumpDeriv(2, N.Coord(1))
    value = ev(d2, [[0.0]])[0]
    # exact: (q'' + q'^2) e^q with q = -1/(1-u^2) gives -2/e at u = 0
    assert value == pytest.approx(-2.0 / math.e, rel=1e-14)
    h = 1e-5
    fd = (bump_values(np.array([h]))[0] - 2 * bump_values(np.array([0.0]))[0]
          + bump_values(np.array([-h]))[0]) / h ** 2
    assert value == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("k", range(1, 9))
def test_bump_derivatives_match_mpmath(k):
    u = np.array([-0.83, -0.41, 0.0, 0.27, 0.66, 0.9])
    got = bump_values(u, k)
    for ui, gi in zip(u, got):
        ref = float(mpmath.diff(mp_bump, ui, k))
        assert gi == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_bump_prefactor_low_orders():
    # bump' = -2u (1-u^2)^-2 bump, so p_1 = -2u
    assert bump_prefactor(0) == (1,)
    assert bump_prefactor(1) == (0, -2)


@pytest.mark.parametrize("k", range(0, 9))
def test_bump_derivatives_vanish_outside(k):
    u = np.array([-5.0, -1.0 - 1e-15, -1.0, 1.0, 1.0 + 1e-9, 3.0])
    assert np.all(bump_values(u, k) == 0.0)
    near = bump_values(np.array([1 - 1e-6, -1 + 1e-6]), k)
    assert np.all(np.isfinite(near))


@SETTINGS
@given(smooth_exprs(dim=2), st.sampled_from([1.0, 16.0]))
def test_derivative_agrees_with_central_differences(e, omega):
    X = np.random.default_rng(7).uniform(-1, 1, size=(100, 2))
    fun = lambda P: evaluate(e, P, omega)  # noqa: E731
    base = fun(X)
    if not np.all(np.isfinite(base)) or np.max(np.abs(base)) > 1e6:
        return
    for axis in range(2):
        exact = evaluate(derivative(e, axis + 1), X, omega)
        fd = central_difference(fun, X, axis)
        # h^2 truncation scales with the third derivative; compare where it is tame
        d3 = evaluate(differentiate(e, (3, 0) if axis == 0 else (0, 3)), X, omega)
        tame = np.abs(d3) * 1e-10 < 1e-6 * np.maximum(1.0, np.abs(exact))
        err = np.abs(exact - fd)[tame]
        assert np.all(err <= 1e-5 * np.maximum(1.0, np.abs(exact[tame])))


@SETTINGS
@given(smooth_exprs(dim=2, max_leaves=6), st.sampled_from([1.0, 16.0]))
def test_mixed_partials_commute(e, omega):
    X = np.random.default_rng(11).uniform(-1, 1, size=(100, 2))
    a = evaluate(derivative(derivative(e, 1), 2), X, omega)
    b = evaluate(derivative(derivative(e, 2), 1), X, omega)
    ok = np.isfinite(a) & np.isfinite(b)
    np.testing.assert_allclose(a[ok], b[ok], rtol=1e-10, atol=1e-10)


def test_multi_indices_ordering():
    alphas = multi_indices(2, 2)
    assert alphas[0] == (0, 0)
    assert set(alphas) == {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)}
    assert [sum(a) for a in alphas] == sorted(sum(a) for a in alphas)


def test_negative_multi_index_rejected():
    with pytest.raises(ValueError):
        differentiate(x(1), (-1,))


# evaluation

def test_eval_scaled_sine():
    e = parse("omega^-1*sin(omega*x)", 1)
    assert ev(e, [[1.0]], 2.0)[0] == pytest.approx(math.sin(2.0) / 2, abs=1e-15)
    assert ev(e, [[1.0]], 2.0)[0] == pytest.approx(0.45465, abs=1e-5)


def test_eval_bump_center_and_outside():
    b = parse("bump(x)", 1)
    assert ev(b, [[0.0]])[0] == pytest.approx(math.exp(-1), rel=1e-15)
    assert ev(b, [[1.5]])[0] == 0.0


def test_omega_scale_is_ceiling():
    e = N.OmegaScale(0.5)
    assert ev(e, [[0.0]], 16.0)[0] == 4.0
    assert ev(e, [[0.0]], 17.0)[0] == 5.0


@pytest.mark.parametrize("t,omega", [(0.7, 32.0), (-0.4, 16.0), (1.3, 256.0)])
def test_antiderivative_node_matches_closed_form(t, omega):
    e = antideriv(parse("cos(omega*x)", 1), 1, 0.0)
    assert ev(e, [[t]], omega)[0] == pytest.approx(math.sin(omega * t) / omega, abs=1e-9)


def test_antiderivative_node_matches_scipy_quad_for_bump():
    e = antideriv(parse("bump(2*x-1)*exp(x)", 1), 1, -0.5)
    for t in (0.1, 0.5, 0.9, 1.4):
        ref, _ = quad(lambda s: float(bump_values(np.array([2 * s - 1]))[0]) * math.exp(s),
                      -0.5, t, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert ev(e, [[t]])[0] == pytest.approx(ref, abs=1e-10)


def test_antiderivative_in_second_variable_of_two():
    e = antideriv(parse("x1*sin(x2)", 2), 2, 0.0)
    got = ev(e, [[0.5, 1.2], [-2.0, 0.3]])
    np.testing.assert_allclose(got, [0.5 * (1 - math.cos(1.2)), -2.0 * (1 - math.cos(0.3))],
                               atol=1e-10)


def test_integral_node_with_omega_limits():
    e = integral(parse("cos(x1)*x2", 2), 1, N.ZERO, div(N.ONE, N.Omega()))
    assert e.free == frozenset({2})
    for w in (1.0, 16.0):
        assert ev(e, [[9.0, 2.0]], w)[0] == pytest.approx(2 * math.sin(1 / w), abs=1e-12)


def test_integral_limits_must_be_coordinate_free():
    with pytest.raises(ValueError):
        integral(x(1), 1, N.ZERO, x(2))


def test_netfunction_domain_checks():
    f = NetFunction.parse("sin(x)", ((-2.0, 2.0),))
    assert f.eval([[1.0]], 16.0)[0] == pytest.approx(math.sin(1.0))
    with pytest.raises(DomainError):
        f.eval([[2.0]], 16.0)
    with pytest.raises(ValueError):
        f.eval([[0.0]], 0.5)
    with pytest.raises(ValueError):
        NetFunction(parse("x2", 2), ((-1.0, 1.0),))


def test_bump_features_for_affine_arguments():
    e = parse("bump(omega*x-3)+bump(x)*sin(omega*x)", 1)
    feats = bump_features(e, 1, 16.0, EvalContext())
    assert feats == [(-1.0, 1.0), (0.125, 0.25)]
    # non-affine arguments are not features
    assert bump_features(parse("bump(x^2)", 1), 1, 16.0) == []
