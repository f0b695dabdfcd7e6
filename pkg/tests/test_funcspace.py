import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhverify.funcspace import (
    DifferentiableFunction,
    FuncSpaceError,
    Interval,
    StrongParams,
    abs_derivative_power,
    make_builtin_function,
    make_builtin_h,
    make_builtin_phi,
    numeric_derivative,
)
from hhverify.quadrature import integrate, integrate_open

from conftest import UNIT


def test_interval_rejects_bad_endpoints():
    with pytest.raises(FuncSpaceError):
        Interval(1.0, 1.0)
    with pytest.raises(FuncSpaceError):
        Interval(0.0, math.inf)


def test_poly_square():
    f = make_builtin_function("poly", [0, 0, 1], UNIT)
    assert f(0.5) == 0.25
    assert f.derivative(0.5) == 1.0
    assert f.exact_derivative


def test_poly_constant_has_zero_derivative():
    f = make_builtin_function("poly", [3], UNIT)
    assert f(0.7) == 3
    assert f.derivative(0.7) == 0
    assert np.all(f.derivative(np.linspace(0, 1, 5)) == 0)


def test_exp_scale_at_zero():
    f = make_builtin_function("exp_scale", [1], UNIT)
    assert f(0.0) == 1.0


@pytest.mark.parametrize("family,params", [("abs_power", [0.5]), ("nope", [1]), ("exp_scale", [1, 2]), ("poly", [])])
def test_bad_function_families(family, params):
    with pytest.raises(FuncSpaceError):
        make_builtin_function(family, params, UNIT)


def test_identity_phi():
    assert make_builtin_phi("identity", [], UNIT)(0.3) == 0.3


def test_power_warp_phi():
    assert make_builtin_phi("power_warp", [2], UNIT)(0.5) == 0.25


def test_affine_phi_endpoints():
    phi = make_builtin_phi("affine", [0.5, 0.25], UNIT)
    assert phi.start == 0.25
    assert phi.end == 0.75
    assert phi.delta == 0.5


def test_phi_range_violation():
    with pytest.raises(FuncSpaceError, match="leaves"):
        make_builtin_phi("affine", [1.0, 0.5], UNIT)


def test_negative_slope_phi_is_constructible_but_decreasing():
    phi = make_builtin_phi("affine", [-0.5, 0.75], UNIT)
    assert phi.delta < 0


@pytest.mark.parametrize("iv", [UNIT, Interval(-2.0, 3.5), Interval(10.0, 10.25)])
@pytest.mark.parametrize("family,params", [("identity", []), ("power_warp", [0.3]), ("power_warp", [2.0]), ("power_warp", [7.0])])
def test_builtin_phi_containment_on_grid(iv, family, params):
    phi = make_builtin_phi(family, params, iv)
    values = phi(iv.grid(1001))
    assert values.min() >= iv.a and values.max() <= iv.b


def test_h_families():
    assert make_builtin_h("h_linear")(0.25) == 0.25
    assert make_builtin_h("h_power", 0.5)(0.25) == 0.5
    assert make_builtin_h("h_one")(0.25) == 1.0
    assert make_builtin_h("h_godunova")(0.25) == 4.0


@pytest.mark.parametrize("s", [None, 0.0, 1.0, 1.5, -0.2])
def test_h_power_rejects_s_outside_unit(s):
    with pytest.raises(FuncSpaceError):
        make_builtin_h("h_power", s)


def test_moment_integrability_flags():
    assert make_builtin_h("h_linear").moment_integrable
    assert make_builtin_h("h_power", 0.3).moment_integrable
    assert make_builtin_h("h_one").moment_integrable
    assert not make_builtin_h("h_godunova").moment_integrable


def test_godunova_moment_grows_like_log():
    # oracle: integral of |2t-1|/t over (delta, 1/2) = ln(1/(2 delta)) - 1 + 2 delta
    h = make_builtin_h("h_godunova")
    values = []
    for k in range(2, 9):
        delta = 10.0**-k
        v = integrate(lambda t: abs(2 * t - 1) * h(t), delta, 0.5, 1e-9).value
        assert v == pytest.approx(math.log(1 / (2 * delta)) - 1 + 2 * delta, abs=1e-7)
        values.append(v)
    # unbounded: each decade closer to 0 adds ln 10 - 1.8 delta
    deltas = 10.0 ** -np.arange(2, 8)
    assert np.allclose(np.diff(values), math.log(10) - 1.8 * deltas, atol=1e-6)


@pytest.mark.parametrize("family,s", [("h_linear", None), ("h_power", 0.2), ("h_power", 0.8), ("h_one", None)])
def test_h_symmetry_identity(family, s):
    h = make_builtin_h(family, s)
    tol = 1e-10
    direct = integrate_open(h, 0, 1, tol).value
    reflected = integrate_open(h.reflected, 0, 1, tol).value
    assert abs(direct - reflected) <= 10 * tol


def test_numeric_derivative_square_at_one():
    f = make_builtin_function("poly", [0, 0, 1], Interval(0, 2))
    assert numeric_derivative(f, 1.0, 1e-5) == pytest.approx(2.0, abs=1e-8)


def test_numeric_derivative_constant_is_exact():
    f = make_builtin_function("poly", [3], UNIT)
    assert numeric_derivative(f, 0.4, 1e-3) == 0.0


def test_numeric_derivative_exp_at_zero():
    f = make_builtin_function("exp_scale", [1], Interval(-1, 1))
    assert numeric_derivative(f, 0.0, 1e-5) == pytest.approx(1.0, abs=1e-9)


def test_numeric_derivative_rejects_stencil_outside_domain():
    f = make_builtin_function("poly", [0, 0, 1], UNIT)
    with pytest.raises(FuncSpaceError):
        numeric_derivative(f, 0.0, 1e-5)
    with pytest.raises(FuncSpaceError):
        numeric_derivative(f, 0.5, -1.0)


BUILTINS = [
    ("poly", [1, -2, 0.5, 0.3]),
    ("poly", [0, 0, 1]),
    ("exp_scale", [1.3]),
    ("exp_scale", [-0.7]),
    ("abs_power", [1.5]),
    ("abs_power", [2.7]),
]


@pytest.mark.parametrize("family,params", BUILTINS)
def test_analytic_derivative_matches_finite_differences(family, params):
    iv = Interval(-1.5, 2.0)
    f = make_builtin_function(family, params, iv)
    rng = np.random.default_rng(7)
    for x in rng.uniform(iv.a + 0.01, iv.b - 0.01, 100):
        if family == "abs_power" and abs(x) < 1e-3:
            continue
        assert numeric_derivative(f, x) == pytest.approx(float(f.derivative(x)), abs=1e-6)


def test_fallback_derivative_is_flagged_and_works_at_endpoints():
    f = DifferentiableFunction(lambda x: np.asarray(x) ** 3, UNIT, "cube")
    assert not f.exact_derivative
    assert f.derivative(0.0) == pytest.approx(0.0, abs=1e-9)
    assert f.derivative(1.0) == pytest.approx(3.0, abs=1e-9)
    assert f.derivative(0.5) == pytest.approx(0.75, abs=1e-9)


def test_abs_derivative_power():
    g = abs_derivative_power(make_builtin_function("poly", [0, -1, 1], UNIT), 2.0)
    # f' = 2x - 1
    assert g(0.0) == pytest.approx(1.0)
    assert g(0.75) == pytest.approx(0.25)


@given(st.floats(min_value=1.0001, max_value=50))
def test_strong_params_conjugate(q):
    params = StrongParams(0.0, q)
    assert abs(1 / params.p + 1 / params.q - 1) <= 1e-12


@pytest.mark.parametrize("c,q", [(-1.0, 2.0), (0.0, 1.0), (0.0, 0.5), (math.nan, 2.0)])
def test_strong_params_validation(c, q):
    with pytest.raises(FuncSpaceError):
        StrongParams(c, q)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-3, max_value=3), min_size=1, max_size=6), st.floats(min_value=-0.9, max_value=0.9))
def test_poly_derivative_property(coeffs, x):
    f = make_builtin_function("poly", coeffs, Interval(-1, 1))
    assert numeric_derivative(f, x) == pytest.approx(float(f.derivative(x)), abs=1e-6)
