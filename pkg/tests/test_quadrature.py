import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twocrit.errors import NonConvergence
from twocrit.quadrature import (QuadResult, RadialIntegrand, integrate, integrate_over_space,
                                integrate_radial, iterated_halfspace_integral, sphere_area)

from oracle_values import ORACLE


def test_polynomial_on_unit_interval():
    res = integrate_radial(RadialIntegrand(lambda r: r, 3), 0.0, 1.0, tol=1e-12)
    assert res.value == pytest.approx(0.5, abs=1e-14)
    assert res.abs_error_estimate <= 1e-12


def test_c0_inner_integral_is_pi():
    f = RadialIntegrand(lambda r: 2 * math.pi * r * (1 + r * r) ** -2, 3)
    res = integrate_radial(f, 0.0, np.inf, tol=1e-12)
    assert abs(res.value - math.pi) <= max(res.abs_error_estimate, 1e-12)
    assert res.abs_error_estimate <= 1e-12 * max(1.0, abs(res.value))


def test_line_integral_matches_oracle():
    res = integrate(lambda r: r * r / (1 + r * r) ** 3, -np.inf, np.inf, tol=1e-12)
    assert res.value == pytest.approx(ORACLE["pi_over_8_line"], rel=1e-12)
    assert res.value == pytest.approx(math.pi / 8, rel=1e-12)


@pytest.mark.parametrize("dim, expected", [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi ** 2)])
def test_sphere_area(dim, expected):
    assert sphere_area(dim) == pytest.approx(expected, rel=1e-14)


def test_sphere_area_three_by_slicing():
    # |S^3| = int_{-1}^{1} |S^2| (1 - s^2)^{1/2} ds
    res = integrate(lambda s: sphere_area(2) * np.sqrt(1 - s * s), -1.0, 1.0, tol=1e-12)
    assert res.value == pytest.approx(ORACLE["sphere_3"], rel=1e-10)
    assert sphere_area(3) == pytest.approx(ORACLE["sphere_3"], rel=1e-14)


def test_sphere_area_rejects_zero():
    with pytest.raises(ValueError):
        sphere_area(0)


def test_iterated_trivial_unit_square():
    res = iterated_halfspace_integral(lambda t: RadialIntegrand(lambda r: np.ones_like(r), 3), lambda t: np.ones_like(t),
                                      0.0, 1e-10, t_upper=1.0, r_upper=1.0)
    assert res.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("eps", [0.5, 0.1, 1e-3])
def test_iterated_quartic_chain(eps):
    # inner: int_0^inf (t^-1 (1+r^2)^-1/2)^4 / 4 r dr = t^-4 / 8
    def inner(t):
        return RadialIntegrand(lambda r: (t ** -1 * (1 + r * r) ** -0.5) ** 4 / 4, 3, 1)
    res = iterated_halfspace_integral(inner, lambda t: t ** 2, math.sqrt(eps), 1e-10)
    assert res.value == pytest.approx(eps ** -0.5 / 8, rel=1e-9)


def test_fubini_product_form():
    def f(t, r):
        return np.exp(-t) * (1 + r * r) ** -2

    a = iterated_halfspace_integral(lambda t: RadialIntegrand(lambda r: f(t, r), 3),
                                    lambda t: np.ones_like(t), 0.0, 1e-10)
    # swapped order: outer in r, inner in t
    b = iterated_halfspace_integral(lambda r: RadialIntegrand(lambda t: f(t, r), 3),
                                    lambda r: np.ones_like(r), 0.0, 1e-10)
    assert abs(a.value - b.value) <= 2e-10 * max(1.0, abs(a.value))
    assert a.value == pytest.approx(math.pi / 4, rel=1e-10)


def test_over_space_gaussian():
    res = integrate_over_space(lambda r: np.exp(-r * r), 3, tol=1e-12)
    assert res.value == pytest.approx(math.pi ** 1.5, rel=1e-11)


def test_quadresult_invariants():
    with pytest.raises(ValueError):
        QuadResult(1.0, -1.0, 1)
    with pytest.raises(ValueError):
        QuadResult(1.0, 0.0, 0)


def test_radial_integrand_invariants():
    with pytest.raises(ValueError):
        RadialIntegrand(lambda r: r, 2)
    with pytest.raises(ValueError):
        RadialIntegrand(lambda r: r, 3, -1)


def test_nonconvergence_on_nonintegrable_singularity():
    with pytest.raises(NonConvergence):
        integrate(lambda x: 1.0 / x, 0.0, 1.0, tol=1e-10, max_depth=12)


def test_monotone_tolerance():
    f = RadialIntegrand(lambda r: np.exp(-r * r), 3)
    errs = [integrate_radial(f, 0.0, np.inf, tol=t).abs_error_estimate for t in (1e-4, 5e-5, 2.5e-5, 1.25e-5, 1e-8)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


poly = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(poly, poly, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(cf, cg, alpha, beta):
    f = np.polynomial.Polynomial(cf)
    g = np.polynomial.Polynomial(cg)
    tol = 1e-10
    lhs = integrate(lambda x: alpha * f(x) + beta * g(x), -1.0, 2.0, tol=tol).value
    rhs = alpha * integrate(f, -1.0, 2.0, tol=tol).value + beta * integrate(g, -1.0, 2.0, tol=tol).value
    scale = max(1.0, abs(lhs), abs(alpha) * abs(integrate(f, -1, 2).value), abs(beta) * abs(integrate(g, -1, 2).value))
    assert abs(lhs - rhs) <= 2 * tol * scale


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(2, 6))
def test_even_symmetry(c, k):
    def f(x):
        return (c + x * x) ** (-k)
    tol = 1e-10
    full = integrate(f, -np.inf, np.inf, tol=tol).value
    half = integrate(f, 0.0, np.inf, tol=tol).value
    assert abs(full - 2 * half) <= tol * max(1.0, abs(full))
