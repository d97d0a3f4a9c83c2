"""Pulsating-heart phantom: ground truth with labeled regions.

A bright speckled annulus (myocardium) surrounds a dark cavity (ventricle)
on a speckled background. The cavity radius pulses with a fixed period;
the outer wall stays put, so the wall thickens and thins like a beating
chamber. Speckle is a static multiplicative Rayleigh field, low-pass
filtered, so consecutive frames differ only where tissue moved. Intensities
are log-compressed to [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import FrameSequence, Grid
from .rng import STREAM_PHANTOM, generator

LABEL_BACKGROUND = 0
LABEL_VENTRICLE = 1
LABEL_MYOCARDIUM = 2

# echogenicity templates (linear amplitude, pre-compression)
_ECHO_VENTRICLE = 0.015
_ECHO_MYOCARDIUM = 0.6
_ECHO_BACKGROUND = 0.15
_DB_FLOOR = -40.0
_EDGE_PX = 0.8  # soft tissue boundary width, keeps sub-pixel motion visible


@dataclass(frozen=True)
class PhantomParams:
    grid: Grid
    n_frames: int = 64
    period: int = 16
    inner_radius: float = 0.22  # fraction of the shorter frame side
    outer_radius: float = 0.38
    amplitude: float = 0.25     # fractional systolic shrink of the cavity
    speckle_amplitude: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.grid.kind == "polar3d":
            raise ValueError("phantom generation supports 2D grids only")
        if not 0.0 < self.inner_radius < self.outer_radius < 1.0:
            raise ValueError("need 0 < inner < outer < 1")
        if self.period < 2:
            raise ValueError("period must be >= 2")
        if not 0.0 <= self.amplitude <= 0.5:
            raise ValueError("amplitude must be in [0, 0.5]")
        if self.inner_radius * (1.0 + self.amplitude / 2.0) >= self.outer_radius:
            raise ValueError("cavity would cross the outer wall at peak dilation")
        if self.n_frames < 1:
            raise ValueError("need at least one frame")


def default_phantom_grid(size: int = 32) -> Grid:
    return Grid(kind="polar2d", n_ax=size, n_lat=size)


def _compress(amplitude: np.ndarray) -> np.ndarray:
    """Log-compress linear amplitudes onto [-1, 1] with a -60 dB floor."""
    db = 20.0 * np.log10(np.maximum(amplitude, 10 ** (_DB_FLOOR / 20.0)))
    return np.clip(db / (-_DB_FLOOR) * 2.0 + 1.0, -1.0, 1.0)


def generate_phantom(p: PhantomParams) -> tuple[FrameSequence, np.ndarray]:
    """Build the sequence and the per-frame uint8 label volume.

    Labels: 0 background, 1 ventricle, 2 myocardium; exact geometric masks.
    Frames at t and t + period are bit-identical (phase is t mod period).
    """
    n_ax, n_lat = p.grid.frame_shape
    rng = generator(p.seed, STREAM_PHANTOM)
    speckle = rng.rayleigh(scale=1.0, size=(n_ax, n_lat))
    speckle = gaussian_filter(speckle, sigma=2.0)
    speckle = 1.0 + p.speckle_amplitude * (speckle / speckle.mean() - 1.0)
    speckle = np.maximum(speckle, 0.05)

    rows = np.arange(n_ax, dtype=np.float64)[:, None]
    cols = np.arange(n_lat, dtype=np.float64)[None, :]
    cy, cx = (n_ax - 1) / 2.0, (n_lat - 1) / 2.0
    dist = np.hypot(rows - cy, cols - cx)
    scale = min(n_ax, n_lat)

    frames = np.empty((p.n_frames,) + p.grid.frame_shape, dtype=np.float32)
    labels = np.empty((p.n_frames,) + p.grid.frame_shape, dtype=np.uint8)
    phase_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for t in range(p.n_frames):
        phase = t % p.period
        if phase not in phase_cache:
            # cavity radius breathes symmetrically about its resting value,
            # so amplitude changes motion without changing the average
            # scene composition
            systole = 0.5 * (1.0 - np.cos(2.0 * np.pi * phase / p.period))
            r_in = p.inner_radius * (1.0 - p.amplitude * (systole - 0.5)) * scale
            r_out = p.outer_radius * scale
            # soft boundaries: echogenicity blends over ~1 px, so sub-pixel
            # wall motion changes every frame
            w_out = 1.0 / (1.0 + np.exp(-(r_out - dist) / _EDGE_PX))
            w_in = 1.0 / (1.0 + np.exp(-(r_in - dist) / _EDGE_PX))
            echo = (_ECHO_BACKGROUND * (1.0 - w_out)
                    + _ECHO_MYOCARDIUM * w_out * (1.0 - w_in)
                    + _ECHO_VENTRICLE * w_in)
            frame = _compress(echo * speckle).astype(np.float32)
            lab = np.full((n_ax, n_lat), LABEL_BACKGROUND, dtype=np.uint8)
            lab[(dist > r_in) & (dist <= r_out)] = LABEL_MYOCARDIUM
            lab[dist <= r_in] = LABEL_VENTRICLE
            phase_cache[phase] = (frame, lab)
        frames[t], labels[t] = phase_cache[phase]
    return FrameSequence(grid=p.grid, frames=frames), labels
