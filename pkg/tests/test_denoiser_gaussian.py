import numpy as np
import pytest

from activescan.denoisers import GaussianDenoiser, GaussianPrior, denoise, gaussian_denoise
from activescan.schedule import make_cosine_schedule, tweedie_estimate


@pytest.fixture(scope="module")
def s500():
    return make_cosine_schedule(500)


TAU_HALF = 250  # cos(pi/4): alpha = sigma = 1/sqrt(2) exactly


def test_scalar_closed_form(s500):
    # mu=0, Sigma=1, alpha=sigma=1/sqrt(2), x=1: eps_hat = Tweedie = 1/sqrt(2)
    prior = GaussianPrior.from_dense(0.0, np.eye(1), stack_shape=(1, 1, 1))
    x = np.ones((1, 1, 1))
    eps_hat = gaussian_denoise(x, TAU_HALF, prior, s500)
    assert eps_hat.ravel()[0] == pytest.approx(1 / np.sqrt(2), rel=1e-9)
    x0 = tweedie_estimate(x, eps_hat, TAU_HALF, s500)
    assert x0.ravel()[0] == pytest.approx(1 / np.sqrt(2), rel=1e-9)


def test_score_vanishes_at_mode(s500):
    prior = GaussianPrior.from_kernel((1, 3, 3), mean=0.4)
    alpha = s500.alphas[200]
    eps_hat = gaussian_denoise(alpha * prior.mean, 200, prior, s500)
    assert np.allclose(eps_hat, 0.0, atol=1e-10)


def test_isotropic_covariance_formula(s500, rng):
    # Sigma = c I: eps_hat = sigma (x - alpha mu) / (alpha^2 c + sigma^2),
    # validated against the dense machinery on the same prior
    c, mu = 0.7, 0.1
    prior = GaussianPrior.from_dense(mu, c * np.eye(9), stack_shape=(1, 3, 3))
    x = rng.standard_normal((1, 3, 3))
    tau = 137
    a, g = s500.alphas[tau], s500.sigmas[tau]
    expected = g * (x - a * mu) / (a**2 * c + g**2)
    assert np.allclose(gaussian_denoise(x, tau, prior, s500), expected, atol=1e-10)


def test_tweedie_matches_direct_linear_solve(s500, rng):
    # oracle consistency on a random dense SPD covariance, d = 64
    d = 64
    q = rng.standard_normal((d, d))
    sigma = q @ q.T / d + 0.1 * np.eye(d)
    mu = rng.standard_normal(d)
    prior = GaussianPrior.from_dense(mu, sigma, stack_shape=(1, 8, 8))
    den = GaussianDenoiser(prior, s500)
    x = rng.standard_normal((1, 8, 8))
    for tau in (50, 250, 450):
        a, g = s500.alphas[tau], s500.sigmas[tau]
        direct = mu + a * sigma @ np.linalg.solve(
            a**2 * sigma + g**2 * np.eye(d), x.ravel() - a * mu)
        eps_hat = den.evaluate(x, tau)
        via_tweedie = tweedie_estimate(x, eps_hat, tau, s500).ravel()
        assert np.linalg.norm(via_tweedie - direct) / np.linalg.norm(direct) < 1e-8
        assert np.allclose(den.posterior_mean(x, tau).ravel(), direct, atol=1e-8)


def test_score_against_finite_differences(s500, rng):
    # -eps_hat / sigma must equal grad log N(x; alpha mu, alpha^2 Sigma + sigma^2 I)
    d = 9
    prior = GaussianPrior.from_kernel((1, 3, 3), mean=0.2,
                                      length_scales={"axial": 1.2, "lateral": 1.2})
    sigma_mat = prior.dense_covariance()
    mu = prior.mean.ravel()
    x = rng.standard_normal((1, 3, 3))
    tau = 220
    a, g = s500.alphas[tau], s500.sigmas[tau]
    cov = a**2 * sigma_mat + g**2 * np.eye(d)
    cov_inv = np.linalg.inv(cov)

    def logpdf(v):
        r = v - a * mu
        return -0.5 * r @ cov_inv @ r

    h = 1e-5
    fd = np.zeros(d)
    flat = x.ravel().copy()
    for i in range(d):
        up, dn = flat.copy(), flat.copy()
        up[i] += h
        dn[i] -= h
        fd[i] = (logpdf(up) - logpdf(dn)) / (2 * h)
    score = -gaussian_denoise(x, tau, prior, s500).ravel() / g
    assert np.linalg.norm(score - fd) / np.linalg.norm(fd) < 1e-4


def test_kernel_and_dense_representations_agree(s500, rng):
    prior_k = GaussianPrior.from_kernel((2, 4, 4), mean=0.3,
                                        length_scales={"temporal": 1.0, "axial": 2.0,
                                                       "lateral": 2.0})
    prior_d = GaussianPrior.from_dense(0.3, prior_k.dense_covariance(), stack_shape=(2, 4, 4))
    x = rng.standard_normal((3, 2, 4, 4))  # batch of 3
    for tau in (30, 250, 480):
        a = gaussian_denoise(x, tau, prior_k, s500)
        b = gaussian_denoise(x, tau, prior_d, s500)
        assert np.allclose(a, b, atol=1e-8)


def test_vjp_is_tweedie_jacobian(s500, rng):
    # J = alpha Sigma (alpha^2 Sigma + sigma^2 I)^{-1}; check J^T v by finite
    # differences of the posterior-mean map
    prior = GaussianPrior.from_kernel((1, 3, 3), mean=0.0)
    den = GaussianDenoiser(prior, s500)
    x = rng.standard_normal((1, 3, 3))
    v = rng.standard_normal((1, 3, 3))
    tau = 300
    h = 1e-6
    lhs = den.vjp(v, tau).ravel()
    # directional check: v^T J e_i via central differences
    fd = np.zeros(9)
    for i in range(9):
        dx = np.zeros(9)
        dx[i] = h
        up = den.posterior_mean(x + dx.reshape(x.shape), tau).ravel()
        dn = den.posterior_mean(x - dx.reshape(x.shape), tau).ravel()
        fd[i] = v.ravel() @ (up - dn) / (2 * h)
    assert np.allclose(lhs, fd, atol=1e-6)


def test_denoise_dispatch_and_purity(s500, rng):
    prior = GaussianPrior.from_kernel((1, 4, 4))
    den = GaussianDenoiser(prior, s500)
    x = rng.standard_normal((1, 4, 4))
    a = denoise(den, x, 100)
    b = denoise(den, x, 100)
    assert np.array_equal(a, b)
    assert np.array_equal(a, gaussian_denoise(x, 100, prior, s500))
    with pytest.raises(ValueError):
        denoise(den, rng.standard_normal((1, 5, 5)), 100)


def test_horizon_limit_returns_input(s500, rng):
    # alpha ~ 0 at the horizon: eps_hat -> x for a unit prior
    prior = GaussianPrior.from_dense(0.0, np.eye(4), stack_shape=(1, 2, 2))
    x = rng.standard_normal((1, 2, 2))
    eps_hat = gaussian_denoise(x, 500, prior, s500)
    assert np.allclose(eps_hat, x, atol=1e-5)


def test_nonpd_covariance_rejected():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(ValueError, match="positive definite"):
        GaussianPrior.from_dense(0.0, bad, stack_shape=(1, 1, 2))


def test_dimension_mismatch_rejected(s500):
    prior = GaussianPrior.from_kernel((1, 4, 4))
    with pytest.raises(ValueError):
        gaussian_denoise(np.zeros((1, 3, 3)), 10, prior, s500)
