import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from ermbridge.errors import UsageError
from ermbridge.hermite import (DecayBoundParams, HermiteBasis, bargmann_of_hermite,
                               coeff_decay_bound, enumerate_multiindices, expansion,
                               gauss_hermite_tensor, gram_matrix, hermite_function,
                               hermite_function_derivative, hermite_functions, hermite_phys,
                               project_coefficients, projection_error_bound, scaled_basis_eval,
                               smoothed_coefficients)


def smoothed_box(x):
    """1_[-1,1] convolved with the unit Gaussian."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return ndtr(x + 1) - ndtr(x - 1)


def test_hermite_poly_small_cases():
    assert hermite_phys(0, 0.7) == 1.0
    assert hermite_phys(1, 0.0) == 0.0
    assert hermite_phys(2, 1.0) == 2.0


def test_hermite_poly_generating_function():
    # H_n(x) = n! [t^n] exp(2xt - t^2), expanded with exact arithmetic
    x = mpmath.mpf("0.3")
    mpmath.mp.dps = 40
    coeffs = mpmath.taylor(lambda t: mpmath.exp(2 * x * t - t * t), 0, 10)
    want = float(coeffs[10] * mpmath.factorial(10))
    assert hermite_phys(10, 0.3) == pytest.approx(want, rel=1e-10)


def test_hermite_function_values():
    assert hermite_function(0, 0.0) == pytest.approx(math.pi ** -0.25)
    assert hermite_function(1, 0.0) == 0.0
    x = np.linspace(-3, 3, 13)
    for n in range(8):
        want = hermite_phys(n, x) * np.exp(-x * x / 2) / math.sqrt(
            2 ** n * math.factorial(n) * math.sqrt(math.pi))
        np.testing.assert_allclose(hermite_function(n, x), want, rtol=1e-12, atol=1e-15)


def test_hermite_function_norm_by_quadrature():
    x, w = np.polynomial.hermite.hermgauss(64)
    val = np.sum(w * np.exp(x * x) * hermite_function(5, x) ** 2)
    assert abs(val - 1) < 1e-9


def test_stable_to_high_degree():
    x = np.linspace(-25, 25, 1001)
    tab = hermite_functions(200, x)
    assert np.all(np.isfinite(tab))
    assert np.max(np.abs(tab)) < 1.0


@pytest.mark.parametrize("n", range(1, 31))
def test_raising_identity(n):
    x = np.linspace(-6, 6, 121)
    lhs = (x * hermite_function(n - 1, x) - hermite_function_derivative(n - 1, x)) / math.sqrt(2)
    np.testing.assert_allclose(lhs, math.sqrt(n) * hermite_function(n, x), atol=1e-9)


def test_derivative_against_finite_differences():
    x = np.linspace(-4, 4, 33)
    h = 1e-6
    for n in (0, 3, 9):
        fd = (hermite_function(n, x + h) - hermite_function(n, x - h)) / (2 * h)
        np.testing.assert_allclose(hermite_function_derivative(n, x), fd, atol=1e-8)


def test_multiindex_enumeration():
    assert list(enumerate_multiindices(1, 2)) == [(0, 0), (1, 0), (0, 1)]
    assert len(enumerate_multiindices(2, 2)) == 6
    assert len(enumerate_multiindices(40, 1)) == 41
    s = enumerate_multiindices(5, 3)
    assert len(s) == math.comb(8, 3)
    degs = [sum(a) for a in s]
    assert degs == sorted(degs)
    assert s.position((0, 0, 5)) == len(s) - 1
    with pytest.raises(UsageError):
        enumerate_multiindices(400, 8)


def test_scaled_basis_examples():
    b = HermiteBasis(enumerate_multiindices(3, 2), 1.0)
    y = np.array([0.4, -1.1])
    assert scaled_basis_eval(b, (2, 1), y) == pytest.approx(
        hermite_function(2, 0.4) * hermite_function(1, -1.1))
    b2 = HermiteBasis(enumerate_multiindices(2, 2), 2.0)
    assert scaled_basis_eval(b2, (0, 0), [0, 0]) == pytest.approx(1.1283791670955126)
    with pytest.raises(UsageError):
        scaled_basis_eval(b2, (3, 0), [0, 0])


def test_design_matrix_matches_single_evaluations(rng):
    b = HermiteBasis(enumerate_multiindices(4, 2), 0.7)
    Y = rng.normal(size=(5, 2))
    phi = b.evaluate(Y)
    for i, alpha in enumerate(b.indexset):
        np.testing.assert_allclose(phi[:, i], [scaled_basis_eval(b, alpha, y) for y in Y])


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_orthonormality(dim, lam):
    b = HermiteBasis(enumerate_multiindices(12, dim), lam)
    G = gram_matrix(b, quad_nodes=40)
    assert np.max(np.abs(G - np.eye(len(b)))) < 1e-8


def test_projection_examples():
    b = HermiteBasis(enumerate_multiindices(6, 1), 1.0)
    c = project_coefficients(lambda Y: hermite_function(0, Y[:, 0]), b)
    np.testing.assert_allclose(c, np.eye(7)[0], atol=1e-9)
    f = expansion(b, [0, 2, 3, 0, 0, 0, 0])
    np.testing.assert_allclose(project_coefficients(f, b), [0, 2, 3, 0, 0, 0, 0], atol=1e-12)
    b2 = HermiteBasis(enumerate_multiindices(3, 2), 0.6)
    want = np.arange(len(b2), dtype=float)
    np.testing.assert_allclose(project_coefficients(expansion(b2, want), b2), want, atol=1e-10)
    with pytest.raises(UsageError):
        project_coefficients(f, b, quad_nodes=5)


def test_decay_bound_formula():
    p = DecayBoundParams(1.0, 1, 2.0)
    assert p.beta == pytest.approx(1 / math.sqrt(2))
    want = p.prefactor * 2 ** 0.25 * (math.exp(0.5) / 2) ** 2
    assert coeff_decay_bound(2, p) == pytest.approx(want)
    assert coeff_decay_bound(2, p) == pytest.approx(p.prefactor * 1.189207 * 0.679570, rel=1e-5)
    crit = math.e * p.beta ** 2
    vals = [coeff_decay_bound(m, p) for m in range(math.ceil(crit), 60)]
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(UsageError):
        coeff_decay_bound(0, p)


def test_smoothed_coefficients_match_projection():
    c_direct = smoothed_coefficients(lambda X: np.ones(len(X)), 1.0, 18)
    b = HermiteBasis(enumerate_multiindices(18, 1), 1.0)
    c_quad = project_coefficients(smoothed_box, b, quad_nodes=160)
    np.testing.assert_allclose(c_direct, c_quad, atol=1e-13)


def test_coefficient_decay_bound_holds_to_degree_40():
    p = DecayBoundParams(1.0, 1, 2.0)
    c = smoothed_coefficients(lambda X: np.ones(len(X)), 1.0, 40)
    for m in range(1, 41):
        assert abs(c[m]) <= coeff_decay_bound(m, p)
    # the odd coefficients vanish by symmetry; the even ones really are resolved
    assert abs(c[40]) > 0


def test_coefficient_decay_bound_2d_weight():
    # a radially symmetric bump supported in the unit disc
    R = 1.0
    def w(X):
        r2 = np.sum(X * X, axis=1)
        return np.where(r2 < R * R, 1 - r2, 0.0)
    p = DecayBoundParams(R, 2, math.pi / 2)
    c = smoothed_coefficients(w, R, 14, dim=2, nodes=120)
    for alpha, ca in zip(enumerate_multiindices(14, 2), c):
        m = sum(alpha)
        if m >= 1:
            assert abs(ca) <= coeff_decay_bound(m, p)


def test_projection_error_tail():
    p = DecayBoundParams(1.0, 1, 2.0)
    c = smoothed_coefficients(lambda X: np.ones(len(X)), 1.0, 80)
    tails = [math.sqrt(np.sum(c[n + 1:] ** 2)) for n in range(8, 40)]
    # n -> n + 1 only drops odd coefficients, which vanish, so the tail is non-increasing
    assert np.all(np.diff(tails) <= 1e-300)
    # each step past an even degree removes a nonzero coefficient
    assert np.all(np.diff(tails[1::2]) < 0)
    for n, t in zip(range(8, 40), tails):
        assert t <= projection_error_bound(n, p)


def test_projection_error_two_ways():
    n = 8
    c = smoothed_coefficients(lambda X: np.ones(len(X)), 1.0, 80)
    b = HermiteBasis(enumerate_multiindices(n, 1), 1.0)
    x, w = np.polynomial.legendre.leggauss(600)
    x, w = 20 * x, 20 * w
    resid = smoothed_box(x) - expansion(b, c[: n + 1])(x[:, None])
    direct = math.sqrt(np.sum(w * resid ** 2))
    tail = math.sqrt(np.sum(c[n + 1:] ** 2))
    assert abs(direct - tail) < 1e-6


def test_projection_bound_precondition():
    p = DecayBoundParams(3.0, 1, 1.0)
    with pytest.raises(UsageError):
        projection_error_bound(4, p)


@pytest.mark.parametrize("n", range(11))
def test_bargmann_identity(n):
    for z in (0.3, 2.0, 1 + 1j, -1.2 + 0.5j, 2.5j):
        got = bargmann_of_hermite(n, z)
        want = z ** n / math.sqrt(math.factorial(n))
        assert abs(got - want) <= 1e-6 * max(abs(want), 1e-3)


def test_bargmann_examples():
    assert bargmann_of_hermite(0, 1.7 - 0.2j) == pytest.approx(1.0, abs=1e-12)
    assert bargmann_of_hermite(1, 2.0) == pytest.approx(2.0, rel=1e-10)
    assert bargmann_of_hermite(5, 1 + 1j) == pytest.approx((1 + 1j) ** 5 / math.sqrt(120),
                                                           rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.integers(0, 10))
def test_scaled_functions_unit_norm(lam, m):
    b = HermiteBasis(enumerate_multiindices(10, 1), lam)
    u, logw = gauss_hermite_tensor(40, 1)
    vals = b.evaluate(u / lam)[:, m]
    norm = np.sum(np.exp(logw) * vals ** 2) / lam
    assert abs(norm - 1) < 1e-9
