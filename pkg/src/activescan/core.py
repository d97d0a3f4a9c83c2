"""Grids, frames, masks and line action spaces.

Everything downstream speaks in terms of these types: a ``Grid`` fixes the
pixel layout, a ``LineActionSpace`` maps scan-line indices to pixel index
sets, and masking is plain elementwise multiplication. All types are
immutable after construction and all operations are pure.

Intensity convention: in memory, frames live in [-1, 1]. File I/O
(see :mod:`activescan.ulsa_io`) maps [0, 1] <-> [-1, 1] affinely so the
conversion happens in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GridKind = str  # one of "polar2d", "cartesian2d", "polar3d"
_KINDS = ("polar2d", "cartesian2d", "polar3d")


@dataclass(frozen=True)
class Grid:
    """Pixel grid of one frame.

    ``n_lat`` counts lateral lines (azimuth for polar grids), ``n_ax`` axial
    samples per line, and ``n_el`` elevation planes (1 unless polar3d).
    ``opening_angle`` (radians) and ``depth_range`` (normalized) only matter
    for scan conversion; they are free display parameters.
    """

    kind: GridKind
    n_ax: int
    n_lat: int
    n_el: int = 1
    opening_angle: float = np.pi / 2
    depth_range: tuple[float, float] = (0.15, 1.0)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if min(self.n_ax, self.n_lat, self.n_el) < 1:
            raise ValueError("grid counts must be >= 1")
        if self.kind == "polar3d" and self.n_el < 2:
            raise ValueError("polar3d grids need n_el >= 2")
        if self.kind != "polar3d" and self.n_el != 1:
            raise ValueError("n_el > 1 is only valid for polar3d grids")
        if not 0.0 < self.opening_angle <= np.pi:
            raise ValueError("opening angle must be in (0, pi]")
        lo, hi = self.depth_range
        if not 0.0 <= lo < hi:
            raise ValueError("depth range must satisfy 0 <= lo < hi")

    @property
    def frame_shape(self) -> tuple[int, ...]:
        """(n_ax, n_lat) for 2D grids, (n_ax, n_el, n_lat) for polar3d."""
        if self.kind == "polar3d":
            return (self.n_ax, self.n_el, self.n_lat)
        return (self.n_ax, self.n_lat)

    @property
    def n_pixels(self) -> int:
        return int(np.prod(self.frame_shape))

    @property
    def n_lines(self) -> int:
        """Number of selectable actions: lateral lines, or planes in 3D."""
        return self.n_el if self.kind == "polar3d" else self.n_lat


@dataclass(frozen=True)
class FrameSequence:
    """T ordered frames on one grid, values in [-1, 1]."""

    grid: Grid
    frames: np.ndarray  # (T, *grid.frame_shape)
    frame_period: float | None = None  # seconds per frame, metadata only

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float32)
        object.__setattr__(self, "frames", f)
        if f.ndim != 1 + len(self.grid.frame_shape) or f.shape[1:] != self.grid.frame_shape:
            raise ValueError(
                f"frames shape {f.shape} does not match grid {self.grid.frame_shape}"
            )
        if f.shape[0] < 1:
            raise ValueError("need at least one frame")
        if not np.isfinite(f).all():
            raise ValueError("frames contain non-finite values")
        if f.min() < -1.0 or f.max() > 1.0:
            raise ValueError("frame values must lie in [-1, 1]")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class Mask:
    """Binary mask over one frame (or broadcastable over a W-stack)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", v)
        if not np.isin(v, (0.0, 1.0)).all():
            raise ValueError("mask values must be 0 or 1")


@dataclass(frozen=True)
class LineActionSpace:
    """Per-line pixel index sets: lines[l] = flat pixel indices of action l.

    The sets are pairwise disjoint and cover the whole frame.
    """

    grid: Grid
    lines: tuple[np.ndarray, ...]

    @property
    def n_lines(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class ActionSet:
    """The K distinct line indices selected for one frame, in selection order."""

    line_indices: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.line_indices)
        object.__setattr__(self, "line_indices", idx)
        if len(set(idx)) != len(idx):
            raise ValueError("action indices must be distinct")

    @property
    def k(self) -> int:
        return len(self.line_indices)


def make_line_action_space(grid: Grid) -> LineActionSpace:
    """Build the per-line pixel index sets for a grid.

    2D grids get one action per lateral column; polar3d grids get one action
    per elevation plane.
    """
    shape = grid.frame_shape
    flat = np.arange(grid.n_pixels).reshape(shape)
    if grid.kind == "polar3d":
        # frame axes: (ax, el, lat); an action measures one elevation plane
        lines = tuple(np.ascontiguousarray(flat[:, e, :]).ravel() for e in range(grid.n_el))
    else:
        lines = tuple(np.ascontiguousarray(flat[:, c]).ravel() for c in range(grid.n_lat))
    return LineActionSpace(grid=grid, lines=lines)


def mask_from_actions(actions: ActionSet, space: LineActionSpace) -> Mask:
    """Mask with ones exactly at the pixels measured by ``actions``."""
    n = space.n_lines
    for i in actions.line_indices:
        if not 0 <= i < n:
            raise ValueError(f"line index {i} out of range [0, {n})")
    values = np.zeros(space.grid.n_pixels, dtype=np.float32)
    for i in actions.line_indices:
        values[space.lines[i]] = 1.0
    return Mask(values=values.reshape(space.grid.frame_shape))


def apply_mask(x: np.ndarray, m: Mask | np.ndarray) -> np.ndarray:
    """Elementwise product; unmeasured entries become exactly 0.

    ``x`` may be a single frame or a stack whose trailing axes match the
    mask; a stacked mask must pair slices one-to-one with ``x``.
    """
    mv = m.values if isinstance(m, Mask) else np.asarray(m)
    x = np.asarray(x)
    if x.shape[-mv.ndim:] != mv.shape:
        raise ValueError(f"mask shape {mv.shape} does not match input {x.shape}")
    return x * mv


def scan_convert(frame: np.ndarray, grid: Grid, out_size: int, background: float = -1.0) -> np.ndarray:
    """Remap a 2D polar frame onto a Cartesian sector for display.

    Bilinear interpolation in (depth, angle); pixels outside the sector get
    the ``background`` sentinel. Display-only: never used in inference.
    """
    if grid.kind != "polar2d":
        raise ValueError("scan_convert expects a polar2d grid")
    frame = np.asarray(frame, dtype=np.float32)
    if frame.shape != grid.frame_shape:
        raise ValueError(f"frame shape {frame.shape} does not match grid {grid.frame_shape}")

    r0, r1 = grid.depth_range
    half = grid.opening_angle / 2.0
    # Sector apex at (x=0, z=0), z pointing down into the image.
    xs = np.linspace(-r1 * np.sin(half), r1 * np.sin(half), out_size)
    zs = np.linspace(0.0, r1, out_size)
    xg, zg = np.meshgrid(xs, zs)
    r = np.hypot(xg, zg)
    theta = np.arctan2(xg, zg)

    inside = (r >= r0) & (r <= r1) & (np.abs(theta) <= half)
    # fractional source coordinates (axial row, lateral column)
    ax = (r - r0) / (r1 - r0) * (grid.n_ax - 1)
    lat = (theta + half) / grid.opening_angle * (grid.n_lat - 1)
    ax = np.clip(ax, 0, grid.n_ax - 1)
    lat = np.clip(lat, 0, grid.n_lat - 1)

    a0 = np.floor(ax).astype(np.intp)
    l0 = np.floor(lat).astype(np.intp)
    a1 = np.minimum(a0 + 1, grid.n_ax - 1)
    l1 = np.minimum(l0 + 1, grid.n_lat - 1)
    fa = (ax - a0).astype(np.float32)
    fl = (lat - l0).astype(np.float32)

    val = (
        frame[a0, l0] * (1 - fa) * (1 - fl)
        + frame[a1, l0] * fa * (1 - fl)
        + frame[a0, l1] * (1 - fa) * fl
        + frame[a1, l1] * fa * fl
    )
    out = np.full((out_size, out_size), background, dtype=np.float32)
    out[inside] = val[inside]
    return out
