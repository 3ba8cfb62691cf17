import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import central_difference, gradient_error, relative_component_error, small_instance
from ermbridge.errors import NumericError, UsageError
from ermbridge.hermite import HermiteBasis
from ermbridge.kernels import KernelParams
from ermbridge.operator import ClipBounds, RiskConfig, empirical_risk
from ermbridge.potential import (GaussianEnvelope, HermitePotential, MlpPotential, TablePotential,
                                 clip_contraction_check, default_ball_radius, hermite_with_envelope,
                                 load_potential, param_gradient, project_ball, save_potential)


@pytest.mark.parametrize("kind", ["mlp", "hermite"])
@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(kind, seed):
    assert gradient_error(kind, seed) < 1e-5


def test_default_hermite_is_gaussian_bump():
    p = HermitePotential(HermiteBasis.for_kernel(4, 1, 2.0), clip_enabled=False)
    y = np.linspace(-3, 3, 7)
    lam = p.basis.scale
    np.testing.assert_allclose(p(y), np.exp(-0.5 * (lam * y) ** 2), rtol=1e-12)
    assert p(np.zeros(1))[0] == pytest.approx(1.0)


def test_unclipped_negative_raises():
    b = HermiteBasis.for_kernel(2, 1, 1.0)
    p = HermitePotential(b, np.array([0.0, 1.0, 0.0]), clip_enabled=False)
    with pytest.raises(NumericError):
        p.log_eval(np.array([[-1.0], [1.0]]))


def test_clip_requires_envelope():
    with pytest.raises(UsageError):
        HermitePotential(HermiteBasis.for_kernel(2, 1, 1.0))


def test_envelope_membership(rng):
    k = KernelParams(2, 1.0)
    Y = rng.normal(size=(50, 2))
    p = hermite_with_envelope(6, k, Y, 1.0)
    c = rng.normal(size=p.n_params) * 3
    p.set_params(c)
    Z = rng.normal(size=(400, 2)) * 3
    v = p(Z)
    env = p.envelope
    assert np.all(v >= env.lower(Z) * (1 - 1e-12))
    assert np.all(v <= env.c_hi * (1 + 1e-12))


def test_envelope_validation():
    with pytest.raises(UsageError):
        GaussianEnvelope(2.0, 1.0, 1.0)
    with pytest.raises(UsageError):
        GaussianEnvelope(0.0, 1.0, 1.0)


def test_ball_radius_default():
    assert default_ball_radius(12, 1) == 13
    assert default_ball_radius(4, 2) == 20
    assert default_ball_radius(10, 10) == 1e6


def test_project_ball(rng):
    b = HermiteBasis.for_kernel(3, 1, 1.0)
    env = GaussianEnvelope(1e-6, 1.0, 10.0)
    p = HermitePotential(b, np.array([3.0, 4.0, 0.0, 0.0]), ball_radius=5.0, envelope=env)
    q = project_ball(p)
    assert float(q.coeffs @ q.coeffs) == pytest.approx(5.0)
    np.testing.assert_allclose(q.coeffs / np.linalg.norm(q.coeffs), [0.6, 0.8, 0, 0])
    np.testing.assert_array_equal(p.coeffs, [3.0, 4.0, 0.0, 0.0])
    inner = HermitePotential(b, np.array([1.0, 1.0, 0.0, 0.0]), ball_radius=5.0, envelope=env)
    assert not inner.project_ball_()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_clip_never_moves_away_from_reference(seed):
    r = np.random.default_rng(seed)
    env = GaussianEnvelope(1e-3, 0.5, 5.0)
    grid = np.linspace(-4, 4, 81)[:, None]
    gstar = lambda Y: np.exp(-0.2 * Y[:, 0] ** 2)
    amp = r.uniform(0.1, 10)
    f = lambda Y: amp * np.cos(r.uniform(0.2, 3) * Y[:, 0]) + r.normal()
    assert clip_contraction_check(gstar, f, env, grid)


def test_clip_contraction_rejects_reference_outside():
    env = GaussianEnvelope(1e-3, 0.5, 1.0)
    with pytest.raises(UsageError):
        clip_contraction_check(lambda Y: np.full(len(Y), 2.0), lambda Y: np.ones(len(Y)),
                               env, np.zeros((3, 1)))


@pytest.mark.parametrize("kind", ["mlp", "hermite"])
def test_checkpoint_round_trip(tmp_path, kind, rng):
    p, X, Y, k = small_instance(kind, 3)
    p.set_params(p.get_params() + rng.normal(scale=1e-2, size=p.n_params))
    path = tmp_path / "pot.npz"
    save_potential(path, p)
    q = load_potential(path)
    assert type(q) is type(p)
    Z = rng.normal(size=(20, 2))
    np.testing.assert_array_equal(p.log_eval(Z), q.log_eval(Z))


def test_checkpoint_wrong_version(tmp_path):
    p = MlpPotential(1, 3)
    path = tmp_path / "p.npz"
    save_potential(path, p)
    with np.load(path) as z:
        data = dict(z)
    data["version"] = np.array(99)
    np.savez(path, **data)
    with pytest.raises(UsageError):
        load_potential(path)


def test_table_potential_is_exact_on_support(rng):
    S = rng.normal(size=(10, 2))
    v = rng.normal(size=10)
    t = TablePotential(S, v)
    np.testing.assert_array_equal(t.log_eval(S), v)
    np.testing.assert_array_equal(t.log_eval(S[3:4] + 1e-9), v[[3]])


@pytest.mark.parametrize("scale", [0.5, 3.0, 196.5])
def test_loss_scale_is_linear(scale):
    p, X, Y, k = small_instance("mlp", 7)
    base = empirical_risk(p, X, Y, k, RiskConfig(1.0))
    assert empirical_risk(p, X, Y, k, RiskConfig(scale)) == pytest.approx(scale * base, rel=1e-12)
    g1 = param_gradient(p, X, Y, k, RiskConfig(1.0))
    # the output-bias component is zero up to roundoff, hence the absolute slack
    np.testing.assert_allclose(param_gradient(p, X, Y, k, RiskConfig(scale)), scale * g1,
                               rtol=1e-12, atol=1e-13 * scale)


def test_mlp_shift_output_keeps_risk(rng):
    p, X, Y, k = small_instance("mlp", 11)
    before = empirical_risk(p, X, Y, k, RiskConfig(clip=ClipBounds.wide()))
    p.shift_output(4.0)
    after = empirical_risk(p, X, Y, k, RiskConfig(clip=ClipBounds.wide()))
    assert after == pytest.approx(before, rel=1e-9)


def test_mlp_init_and_dimension_check():
    a, b = MlpPotential(3, 5, seed=1), MlpPotential(3, 5, seed=1)
    np.testing.assert_array_equal(a.get_params(), b.get_params())
    assert a.n_params == 3 * 5 + 5 + 5 * 5 + 5 + 5 + 1
    with pytest.raises(UsageError):
        a.log_eval(np.zeros((2, 4)))


def test_gradient_needs_two_points():
    p, X, Y, k = small_instance("mlp", 0)
    with pytest.raises(UsageError):
        param_gradient(p, X[:1], Y, k)


def test_clipped_region_has_zero_gradient():
    k = KernelParams(1, 1.0)
    b = HermiteBasis.for_kernel(2, 1, 1.0)
    env = GaussianEnvelope(1e-2, 0.01, 10.0)
    p = HermitePotential(b, np.array([1.0, 0.0, 0.0]), envelope=env)
    Y = np.array([[3.0], [4.0]])
    assert np.all(p.raw_eval(Y) < env.lower(Y))
    np.testing.assert_array_equal(p.vjp(Y, np.ones(2)), 0.0)


def test_relative_error_helper_floor():
    assert relative_component_error(np.array([1.0, 0.0]), np.array([1.0, 1e-9])) < 1e-2
    assert relative_component_error(np.array([1.0, 2.0]), np.array([1.0, 2.2])) == \
        pytest.approx(0.2 / 2.2)
