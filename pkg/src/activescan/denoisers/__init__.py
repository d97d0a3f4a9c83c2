"""Pluggable noise-prediction denoisers.

A denoiser exposes ``evaluate(x_tau, tau) -> eps_hat`` (pure, shape
preserving) plus ``vjp_mode``: ``"exact"`` when it can apply the transposed
Jacobian of its Tweedie map (the Gaussian oracle), ``"identity"`` when
callers must approximate that Jacobian as the identity (the learned net).
"""

from .base import DenoiserSpec, denoise
from .gaussian import GaussianDenoiser, GaussianPrior, gaussian_denoise

__all__ = [
    "DenoiserSpec",
    "denoise",
    "GaussianDenoiser",
    "GaussianPrior",
    "gaussian_denoise",
]
