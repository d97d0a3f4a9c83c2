"""Pure-numpy twin of the compiled entropy kernel."""

import numpy as np


def pairwise_entropy(particles: np.ndarray, sigma_x2: float) -> np.ndarray:
    """Per-pixel entropy of the particle set; particles is (N_p, n_pixels)."""
    diffs = particles[:, None, :] - particles[None, :, :]
    inner = np.exp(-(diffs**2) / (2.0 * sigma_x2)).mean(axis=1)
    return -np.log(inner).mean(axis=0)
