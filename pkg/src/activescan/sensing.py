"""Simulated acquisition and the W-slice measurement/mask buffers.

Acquisition is noiseless masking of the ground-truth frame: the Gaussian
likelihood the sampler assumes is a relaxation for guidance, not an
acquisition model. Buffers are immutable; ``push`` returns a new buffer.
Until W real slices exist, the earliest real slice is replicated backwards
(zero frames would be far outside the denoiser's training distribution).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ActionSet, FrameSequence, LineActionSpace, Mask, apply_mask, mask_from_actions


@dataclass(frozen=True)
class MeasurementBuffer:
    """W masked frames with their masks, oldest first; ``filled`` counts
    how many are real (not cold-start padding)."""

    y_slices: np.ndarray  # (W, *frame_shape)
    m_slices: np.ndarray  # (W, *frame_shape)
    filled: int

    def __post_init__(self):
        if self.y_slices.shape != self.m_slices.shape:
            raise ValueError("measurement and mask buffers must have equal shapes")
        if not 0 <= self.filled <= self.window:
            raise ValueError("filled count out of range")

    @property
    def window(self) -> int:
        return self.y_slices.shape[0]


def empty_buffer(window: int, frame_shape: tuple[int, ...]) -> MeasurementBuffer:
    if window < 1:
        raise ValueError("window must be >= 1")
    z = np.zeros((window,) + tuple(frame_shape), dtype=np.float64)
    return MeasurementBuffer(y_slices=z, m_slices=z.copy(), filled=0)


def acquire(source: FrameSequence, t: int, actions: ActionSet, space: LineActionSpace) -> np.ndarray:
    """Measure frame ``t`` (0-based) of the source through the action mask."""
    if not 0 <= t < source.n_frames:
        raise ValueError(f"frame index {t} out of range [0, {source.n_frames})")
    mask = mask_from_actions(actions, space)
    return apply_mask(source.frames[t].astype(np.float64), mask)


def push(buf: MeasurementBuffer, y: np.ndarray, m: Mask | np.ndarray) -> MeasurementBuffer:
    """Append a measured slice, evicting the oldest; replication padding
    keeps the buffer full before W real slices exist."""
    mv = m.values if isinstance(m, Mask) else np.asarray(m)
    y = np.asarray(y, dtype=np.float64)
    frame_shape = buf.y_slices.shape[1:]
    if y.shape != frame_shape or mv.shape != frame_shape:
        raise ValueError(f"slice shape {y.shape}/{mv.shape} does not match buffer {frame_shape}")
    y = y * mv  # keep the y = m * y invariant exact
    w = buf.window
    if buf.filled == 0:
        ys = np.broadcast_to(y, (w,) + frame_shape).copy()
        ms = np.broadcast_to(mv, (w,) + frame_shape).astype(np.float64).copy()
        return MeasurementBuffer(y_slices=ys, m_slices=ms, filled=min(1, w))
    ys = np.concatenate([buf.y_slices[1:], y[None]], axis=0)
    ms = np.concatenate([buf.m_slices[1:], np.asarray(mv, dtype=np.float64)[None]], axis=0)
    if buf.filled < w:
        # keep padding the leading slots with the earliest real slice
        n_pad = w - (buf.filled + 1)
        if n_pad > 0:
            first_y = buf.y_slices[-buf.filled]
            first_m = buf.m_slices[-buf.filled]
            ys[:n_pad] = first_y
            ms[:n_pad] = first_m
    return MeasurementBuffer(y_slices=ys, m_slices=ms, filled=min(buf.filled + 1, w))
