"""Action selection: entropy map, line aggregation, K-greedy, baselines.

The per-pixel entropy of the belief distribution is the pairwise-kernel
mixture-entropy estimate: high where particles disagree. Summing it over
each line's pixels scores candidate transmits; K-greedy selection
repeatedly takes the best line and suppresses its neighbors with an RBF
factor, standing in for the entropy drop a real measurement would cause.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ActionSet, LineActionSpace
from .posterior import ParticleStack
from .rng import child

DEFAULT_SIGMA_X2 = 0.04  # (0.1 * dynamic range)^2


@dataclass(frozen=True)
class EntropyMap:
    values: np.ndarray  # one frame's shape, nonnegative

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if not np.isfinite(v).all():
            raise ValueError("entropy map contains non-finite values")
        if v.size and v.min() < 0:
            raise ValueError("entropy values must be nonnegative")


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "active"  # active | random | equispaced
    k: int = 7
    sigma_x2: float = DEFAULT_SIGMA_X2
    rbf_width: float | None = None  # None -> (L / 4K)^2 clamped to >= 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("active", "random", "equispaced"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if self.sigma_x2 <= 0:
            raise ValueError("sigma_x2 must be positive")
        if self.rbf_width is not None and self.rbf_width <= 0:
            raise ValueError("rbf width must be positive")

    def width_for(self, n_lines: int) -> float:
        if self.rbf_width is not None:
            return float(self.rbf_width)
        return max(1.0, (n_lines / (4.0 * self.k)) ** 2)


def entropy_map(particles: ParticleStack, sigma_x2: float = DEFAULT_SIGMA_X2) -> EntropyMap:
    """Pixel-wise entropy of the belief (the particles' final slices)."""
    if sigma_x2 <= 0:
        raise ValueError("sigma_x2 must be positive")
    if particles.n_particles < 2:
        raise ValueError("entropy needs at least two particles")
    finals = particles.final_slices()
    frame_shape = finals.shape[1:]
    flat = finals.reshape(finals.shape[0], -1).astype(np.float64)
    # canonical per-pixel ordering makes the float summation order, and so
    # the result, exactly invariant to particle permutations
    flat = np.ascontiguousarray(np.sort(flat, axis=0))
    values = _kernels.pairwise_entropy(flat, float(sigma_x2))
    # the i = j kernel term bounds the inner mean by 1, so values are >= 0
    # up to rounding; clamp the rounding.
    return EntropyMap(values=np.maximum(values, 0.0).reshape(frame_shape))


def linewise_entropy(h: EntropyMap, space: LineActionSpace) -> np.ndarray:
    """Per-line totals: sum of the map over each line's pixel set."""
    flat = h.values.ravel()
    if flat.shape[0] != space.grid.n_pixels:
        raise ValueError("entropy map does not match the action space grid")
    return np.array([flat[idx].sum() for idx in space.lines])


def k_greedy_select(line_entropies: np.ndarray, k: int, w: float) -> ActionSet:
    """Pick K distinct lines: argmax, then RBF-suppress neighbors, repeat.

    Each pick multiplies every line's entropy by 1 - exp(-(l - l*)^2 / w),
    which is exactly 0 at the picked line and recovers toward 1 with
    distance. Ties break to the lowest index.
    """
    h = np.asarray(line_entropies, dtype=np.float64).copy()
    n = h.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"K={k} out of range [1, {n}]")
    if w <= 0:
        raise ValueError("rbf width must be positive")
    idx = np.arange(n)
    taken = np.zeros(n, dtype=bool)
    picks = []
    for _ in range(k):
        masked = np.where(taken, -np.inf, h)
        best = int(np.argmax(masked))  # argmax returns the lowest tied index
        picks.append(best)
        taken[best] = True
        h *= 1.0 - np.exp(-((idx - best) ** 2) / w)
    return ActionSet(line_indices=tuple(picks))


def equispaced_policy(t: int, n_lines: int, k: int) -> ActionSet:
    """Rolling equispaced lines: stride L // K, offset cycling with t (1-based)."""
    if not 1 <= k <= n_lines:
        raise ValueError(f"K={k} out of range [1, {n_lines}]")
    stride = n_lines // k
    offset = (t - 1) % stride if stride > 0 else 0
    picks = tuple((offset + j * stride) % n_lines for j in range(k))
    return ActionSet(line_indices=picks)


def random_policy(n_lines: int, k: int, rng_seed, t: int) -> ActionSet:
    """K distinct lines drawn uniformly from the (seed, t) substream."""
    if not 1 <= k <= n_lines:
        raise ValueError(f"K={k} out of range [1, {n_lines}]")
    base = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    rng = np.random.default_rng(child(base, int(t)))
    picks = rng.choice(n_lines, size=k, replace=False)
    return ActionSet(line_indices=tuple(int(i) for i in picks))


def azimuth_average(h3d: EntropyMap) -> EntropyMap:
    """Average a 3D entropy map (ax, el, az) over azimuth -> (ax, el)."""
    if h3d.values.ndim != 3:
        raise ValueError("azimuth_average expects a 3D entropy map")
    return EntropyMap(values=h3d.values.mean(axis=2))
