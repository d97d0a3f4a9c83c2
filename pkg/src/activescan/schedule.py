"""Variance-preserving diffusion schedule and its elementary steps.

The schedule stores signal rates alpha and noise rates sigma for integer
steps tau in [0, tau_max], with alpha_0 = 1, sigma_0 = 0 and
alpha^2 + sigma^2 = 1 everywhere. The reverse sampler composes three pure
functions of it: forward noising, the Tweedie clean-signal estimate, and
deterministic re-noising with the predicted noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Signal-rate floor: keeps the Tweedie division finite at the horizon and
# makes tweedie -> renoise an exact round trip at every step.
ALPHA_FLOOR = 1e-6


@dataclass(frozen=True)
class DiffusionSchedule:
    tau_max: int
    alphas: np.ndarray  # (tau_max + 1,)
    sigmas: np.ndarray  # (tau_max + 1,)

    def __post_init__(self):
        if self.tau_max < 1:
            raise ValueError("tau_max must be >= 1")
        a, s = self.alphas, self.sigmas
        if a.shape != (self.tau_max + 1,) or s.shape != (self.tau_max + 1,):
            raise ValueError("rate arrays must have tau_max + 1 entries")
        if not (np.isclose(a[0], 1.0) and np.isclose(s[0], 0.0)):
            raise ValueError("schedule must start at (alpha, sigma) = (1, 0)")
        if np.any(np.diff(a) > 1e-12) or np.any(np.diff(s) < -1e-12):
            raise ValueError("alpha must be non-increasing and sigma non-decreasing")
        if not np.allclose(a**2 + s**2, 1.0, atol=1e-6):
            raise ValueError("schedule is not variance preserving")
        if a[-1] > 1e-3:
            raise ValueError("alpha at the horizon must be <= 1e-3")

    def check_tau(self, tau: int) -> int:
        tau = int(tau)
        if not 0 <= tau <= self.tau_max:
            raise ValueError(f"tau {tau} out of range [0, {self.tau_max}]")
        return tau


def make_cosine_schedule(tau_max: int) -> DiffusionSchedule:
    """Cosine variance-preserving schedule over tau in [0, tau_max]."""
    if tau_max < 1:
        raise ValueError("tau_max must be >= 1")
    tau = np.arange(tau_max + 1, dtype=np.float64)
    alphas = np.cos(tau / tau_max * np.pi / 2.0)
    alphas = np.clip(alphas, ALPHA_FLOOR, 1.0)
    alphas[0] = 1.0
    sigmas = np.sqrt(1.0 - alphas**2)
    return DiffusionSchedule(tau_max=int(tau_max), alphas=alphas, sigmas=sigmas)


def forward_diffuse(x0: np.ndarray, eps: np.ndarray, tau: int, s: DiffusionSchedule) -> np.ndarray:
    """Noise a clean tensor to level tau: alpha * x0 + sigma * eps."""
    tau = s.check_tau(tau)
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: {x0.shape} vs {eps.shape}")
    return s.alphas[tau] * x0 + s.sigmas[tau] * eps


def tweedie_estimate(x_tau: np.ndarray, eps_hat: np.ndarray, tau: int, s: DiffusionSchedule) -> np.ndarray:
    """Clean-signal estimate (x_tau - sigma * eps_hat) / alpha."""
    tau = s.check_tau(tau)
    alpha = max(float(s.alphas[tau]), ALPHA_FLOOR)
    return (np.asarray(x_tau) - s.sigmas[tau] * np.asarray(eps_hat)) / alpha


def ddim_prior_step(x0_hat: np.ndarray, eps_hat: np.ndarray, tau_next: int, s: DiffusionSchedule) -> np.ndarray:
    """Deterministic re-noising of the clean estimate down to tau_next."""
    tau_next = s.check_tau(tau_next)
    return s.alphas[tau_next] * np.asarray(x0_hat) + s.sigmas[tau_next] * np.asarray(eps_hat)
