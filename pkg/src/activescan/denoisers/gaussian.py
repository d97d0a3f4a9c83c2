"""Exact denoiser for a Gaussian prior: the verification oracle.

With x0 ~ N(mu, Sigma) and x_tau = alpha x0 + sigma eps, everything is
closed form: the marginal at level tau is N(alpha mu, alpha^2 Sigma +
sigma^2 I), the minimum-MSE noise prediction is

    eps_hat = sigma (alpha^2 Sigma + sigma^2 I)^{-1} (x_tau - alpha mu),

the Tweedie estimate equals the conditional mean E[x0 | x_tau], and the
Jacobian of the Tweedie map is J = alpha Sigma (alpha^2 Sigma + sigma^2 I)^{-1}
(symmetric). All three are applied in the eigenbasis of Sigma.

Sigma is either explicit (d <= 256) or a separable squared-exponential
kernel over the stack axes, stored as per-axis factors so the eigenbasis is
a Kronecker product and applications stay cheap at any grid size.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ..schedule import ALPHA_FLOOR, DiffusionSchedule

EIG_FLOOR = 1e-8  # minimum Sigma eigenvalue after jitter

# default squared-exponential length scales per stack axis, in pixels/frames
DEFAULT_SCALES = {"temporal": 1.0, "axial": 4.0, "lateral": 2.0, "elevation": 4.0}
DEFAULT_VARIANCE = 0.25


def se_kernel(n: int, length_scale: float) -> np.ndarray:
    """Squared-exponential kernel over integer coordinates 0..n-1."""
    idx = np.arange(n, dtype=np.float64)
    d2 = (idx[:, None] - idx[None, :]) ** 2
    return np.exp(-d2 / (2.0 * length_scale**2))


def _axis_scales(stack_shape: tuple[int, ...], scales: dict[str, float]) -> list[float]:
    """Map stack axes (W, ax[, el], lat) to their kernel length scales."""
    if len(stack_shape) == 3:
        names = ("temporal", "axial", "lateral")
    elif len(stack_shape) == 4:
        names = ("temporal", "axial", "elevation", "lateral")
    else:
        raise ValueError(f"stack must have 3 or 4 axes, got shape {stack_shape}")
    return [float(scales[n]) for n in names]


@dataclass
class GaussianPrior:
    """Gaussian prior over flattened stacks, held in eigenbasis form.

    Build with :meth:`from_dense` (explicit Sigma, d <= 256) or
    :meth:`from_kernel` (separable squared-exponential over the stack axes).
    """

    stack_shape: tuple[int, ...]
    mean: np.ndarray                 # shape == stack_shape
    eigvecs: list[np.ndarray]        # one orthogonal basis per axis (dense: single factor)
    eigvals: np.ndarray              # full eigenvalue grid, shape == stack_shape (dense: (d,))
    _dense: bool = field(default=False)

    @classmethod
    def from_dense(cls, mean: np.ndarray | float, sigma: np.ndarray,
                   stack_shape: tuple[int, ...] | None = None) -> "GaussianPrior":
        sigma = np.asarray(sigma, dtype=np.float64)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("covariance must be a square matrix")
        d = sigma.shape[0]
        if d > 256:
            raise ValueError("explicit covariance is limited to d <= 256; use from_kernel")
        if not np.allclose(sigma, sigma.T, atol=1e-8):
            raise ValueError("covariance must be symmetric")
        vals, vecs = np.linalg.eigh(sigma)
        if vals.min() < -1e-6 * max(vals.max(), 1.0):
            raise ValueError("covariance is not positive definite")
        vals = np.maximum(vals, EIG_FLOOR)
        shape = tuple(stack_shape) if stack_shape is not None else (d,)
        if int(np.prod(shape)) != d:
            raise ValueError(f"stack shape {shape} does not flatten to d={d}")
        mean_arr = np.asarray(mean, dtype=np.float64)
        if mean_arr.ndim == 1 and mean_arr.size == d:
            mean_arr = mean_arr.reshape(shape)
        mean_arr = np.broadcast_to(mean_arr, shape).copy()
        return cls(stack_shape=shape, mean=mean_arr, eigvecs=[vecs], eigvals=vals, _dense=True)

    @classmethod
    def from_kernel(cls, stack_shape: tuple[int, ...], mean: np.ndarray | float = 0.0,
                    length_scales: dict[str, float] | None = None,
                    variance: float = DEFAULT_VARIANCE) -> "GaussianPrior":
        if variance <= 0:
            raise ValueError("marginal variance must be positive")
        scales = dict(DEFAULT_SCALES)
        scales.update(length_scales or {})
        per_axis = _axis_scales(tuple(stack_shape), scales)
        vecs, vals = [], []
        for n, ls in zip(stack_shape, per_axis):
            w, u = np.linalg.eigh(se_kernel(n, ls))
            vecs.append(u)
            vals.append(w)
        grid = float(variance) * functools.reduce(np.multiply, np.ix_(*vals))
        grid = np.maximum(np.asarray(grid), EIG_FLOOR)
        mean_arr = np.broadcast_to(np.asarray(mean, dtype=np.float64), tuple(stack_shape)).copy()
        return cls(stack_shape=tuple(stack_shape), mean=mean_arr,
                   eigvecs=vecs, eigvals=grid, _dense=False)

    @property
    def dim(self) -> int:
        return int(np.prod(self.stack_shape))

    def _to_eigen(self, x: np.ndarray) -> np.ndarray:
        if self._dense:
            flat = x.reshape(x.shape[: x.ndim - len(self.stack_shape)] + (self.dim,))
            return flat @ self.eigvecs[0]
        nb = x.ndim - len(self.stack_shape)
        for a, u in enumerate(self.eigvecs):
            x = np.moveaxis(np.moveaxis(x, nb + a, -1) @ u, -1, nb + a)
        return x

    def _from_eigen(self, z: np.ndarray, batch_shape: tuple[int, ...]) -> np.ndarray:
        if self._dense:
            out = z @ self.eigvecs[0].T
            return out.reshape(batch_shape + self.stack_shape)
        nb = z.ndim - len(self.stack_shape)
        for a, u in enumerate(self.eigvecs):
            z = np.moveaxis(np.moveaxis(z, nb + a, -1) @ u.T, -1, nb + a)
        return z

    def apply_filtered(self, x: np.ndarray, scale: np.ndarray) -> np.ndarray:
        """U diag(scale(lambda)) U^T x, batched over leading axes of x."""
        batch = x.shape[: x.ndim - len(self.stack_shape)]
        z = self._to_eigen(np.asarray(x, dtype=np.float64))
        return self._from_eigen(z * scale, batch)

    def dense_covariance(self) -> np.ndarray:
        """Materialize Sigma (tests and small-d oracles only)."""
        if self.dim > 4096:
            raise ValueError("refusing to materialize a very large covariance")
        if self._dense:
            u = self.eigvecs[0]
            return (u * self.eigvals) @ u.T
        basis = np.eye(self.dim).reshape((self.dim,) + self.stack_shape)
        full = self.apply_filtered(basis, self.eigvals).reshape(self.dim, self.dim)
        return (full + full.T) / 2.0

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Draw n samples from N(mean, Sigma)."""
        z = rng.standard_normal((n,) + self.stack_shape)
        colored = self.apply_filtered(z, np.sqrt(self.eigvals))
        return colored + self.mean


class GaussianDenoiser:
    """DenoiserSpec backed by a GaussianPrior; vjp_mode = "exact"."""

    vjp_mode = "exact"

    def __init__(self, prior: GaussianPrior, schedule: DiffusionSchedule):
        self.prior = prior
        self.schedule = schedule

    @property
    def stack_shape(self) -> tuple[int, ...]:
        return self.prior.stack_shape

    def _rates(self, tau: int) -> tuple[float, float]:
        tau = self.schedule.check_tau(tau)
        return float(self.schedule.alphas[tau]), float(self.schedule.sigmas[tau])

    def evaluate(self, x_tau: np.ndarray, tau: int) -> np.ndarray:
        alpha, sigma = self._rates(tau)
        lam = self.prior.eigvals
        scale = sigma / (alpha**2 * lam + sigma**2)
        centered = np.asarray(x_tau) - alpha * self.prior.mean
        return self.prior.apply_filtered(centered, scale)

    def posterior_mean(self, x_tau: np.ndarray, tau: int) -> np.ndarray:
        """Closed-form E[x0 | x_tau] (equals the Tweedie estimate)."""
        alpha, sigma = self._rates(tau)
        lam = self.prior.eigvals
        scale = alpha * lam / (alpha**2 * lam + sigma**2)
        centered = np.asarray(x_tau) - alpha * self.prior.mean
        return self.prior.mean + self.prior.apply_filtered(centered, scale)

    def vjp(self, v: np.ndarray, tau: int) -> np.ndarray:
        """Apply J^T = J = alpha Sigma (alpha^2 Sigma + sigma^2 I)^{-1} to v."""
        alpha, sigma = self._rates(tau)
        alpha = max(alpha, ALPHA_FLOOR)
        lam = self.prior.eigvals
        scale = alpha * lam / (alpha**2 * lam + sigma**2)
        return self.prior.apply_filtered(np.asarray(v), scale)


def gaussian_denoise(x_tau: np.ndarray, tau: int, prior: GaussianPrior,
                     s: DiffusionSchedule) -> np.ndarray:
    """Exact noise prediction for a Gaussian prior (see module docstring)."""
    x_tau = np.asarray(x_tau)
    k = len(prior.stack_shape)
    if x_tau.shape[-k:] != prior.stack_shape:
        raise ValueError(
            f"input trailing shape {x_tau.shape[-k:]} does not match prior {prior.stack_shape}"
        )
    return GaussianDenoiser(prior, s).evaluate(x_tau, tau)
