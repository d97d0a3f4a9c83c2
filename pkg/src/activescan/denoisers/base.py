from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class DenoiserSpec(Protocol):
    """Contract every denoiser satisfies.

    ``stack_shape`` is the (W, *frame_shape) tensor layout the denoiser was
    built for; ``evaluate`` must be deterministic and pure.
    """

    vjp_mode: str  # "exact" or "identity"
    stack_shape: tuple[int, ...]

    def evaluate(self, x_tau: np.ndarray, tau: int) -> np.ndarray: ...


def denoise(d: DenoiserSpec, x_tau: np.ndarray, tau: int) -> np.ndarray:
    """Validate shapes and dispatch to the wrapped denoiser."""
    x_tau = np.asarray(x_tau)
    k = len(d.stack_shape)
    if x_tau.shape[-k:] != tuple(d.stack_shape):
        raise ValueError(
            f"input trailing shape {x_tau.shape[-k:]} does not match denoiser stack {d.stack_shape}"
        )
    return d.evaluate(x_tau, tau)
