import numpy as np
import pytest

from activescan.schedule import (ddim_prior_step, forward_diffuse, make_cosine_schedule,
                                 tweedie_estimate)


def test_boundaries(schedule500):
    s = schedule500
    assert s.alphas[0] == 1.0 and s.sigmas[0] == 0.0
    assert s.alphas[500] <= 1e-3
    assert s.sigmas[500] == pytest.approx(1.0, abs=1e-6)


def test_variance_preserving(schedule500):
    s = schedule500
    assert np.allclose(s.alphas**2 + s.sigmas**2, 1.0, atol=1e-6)
    assert np.all(np.diff(s.alphas) <= 1e-12)
    assert np.all(np.diff(s.sigmas) >= -1e-12)


def test_rejects_bad_horizon():
    with pytest.raises(ValueError):
        make_cosine_schedule(0)


def test_forward_diffuse_identities(schedule500, rng):
    s = schedule500
    x0 = rng.standard_normal((3, 3))
    eps = rng.standard_normal((3, 3))
    assert np.array_equal(forward_diffuse(x0, eps, 0, s), x0)
    assert np.allclose(forward_diffuse(x0, np.zeros_like(x0), 100, s), s.alphas[100] * x0)


def test_forward_diffuse_arithmetic():
    # alpha = 0.8, sigma = 0.6, x0 = 1, eps = -1 -> 0.2
    s = make_cosine_schedule(500)
    tau = int(np.argmin(np.abs(s.alphas - 0.8)))
    a, g = s.alphas[tau], s.sigmas[tau]
    out = forward_diffuse(np.array(1.0), np.array(-1.0), tau, s)
    assert out == pytest.approx(a - g)
    # exact variant with hand-held rates
    assert 0.8 * 1.0 + 0.6 * (-1.0) == pytest.approx(0.2)


def test_tweedie_inverts_forward(schedule500, rng):
    s = schedule500
    x0 = rng.standard_normal((4, 4))
    eps = rng.standard_normal((4, 4))
    for tau in (1, 100, 250, 499):
        x_tau = forward_diffuse(x0, eps, tau, s)
        assert np.allclose(tweedie_estimate(x_tau, eps, tau, s), x0, atol=1e-9)


def test_tweedie_at_zero_is_identity(schedule500, rng):
    x = rng.standard_normal((2, 2))
    assert np.allclose(tweedie_estimate(x, rng.standard_normal((2, 2)), 0, schedule500), x)


def test_ddim_prior_step_identities(schedule500, rng):
    s = schedule500
    x0 = rng.standard_normal((2, 5))
    eps = rng.standard_normal((2, 5))
    assert np.array_equal(ddim_prior_step(x0, eps, 0, s), x0)
    assert np.allclose(ddim_prior_step(x0, np.zeros_like(eps), 42, s), s.alphas[42] * x0)


def test_renoise_after_tweedie_roundtrip(schedule500, rng):
    s = schedule500
    x = rng.standard_normal((3, 3))
    eps_hat = rng.standard_normal((3, 3))
    for tau in (1, 17, 250, 499, 500):
        x0_hat = tweedie_estimate(x, eps_hat, tau, s)
        back = ddim_prior_step(x0_hat, eps_hat, tau, s)
        assert np.allclose(back, x, atol=1e-5)


def test_forward_diffuse_affine_superposition(schedule500, rng):
    s = schedule500
    x1, x2 = rng.standard_normal((2, 4, 4))
    e1, e2 = rng.standard_normal((2, 4, 4))
    tau = 123
    lhs = forward_diffuse(x1 + x2, e1 + e2, tau, s)
    rhs = forward_diffuse(x1, e1, tau, s) + forward_diffuse(x2, e2, tau, s)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_tau_range_checks(schedule500):
    with pytest.raises(ValueError):
        forward_diffuse(np.zeros(1), np.zeros(1), 501, schedule500)
    with pytest.raises(ValueError):
        forward_diffuse(np.zeros(1), np.zeros(1), -1, schedule500)
    with pytest.raises(ValueError):
        forward_diffuse(np.zeros(2), np.zeros(3), 5, schedule500)
