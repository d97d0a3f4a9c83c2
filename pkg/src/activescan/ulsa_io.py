"""ULSA tensor container: the on-disk format for sequences and labels.

Layout (little-endian): magic ``ULSA`` (4 ASCII bytes), version u8 = 1,
dtype u8 (0 = float32, 1 = uint8), ndim u8, then ndim u32 dims, then the
row-major payload.

Frame sequences are stored with dims [T, n_ax, n_lat] (2D) or
[T, n_ax, n_el, n_lat] (3D). Intensities are stored in [0, 1]; loading and
saving map them affinely to and from the in-memory [-1, 1] range.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import FrameSequence, Grid

MAGIC = b"ULSA"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("u1")}
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("uint8"): 1}


def save_array(path: str | Path, array: np.ndarray) -> None:
    """Write one tensor to a ULSA container (float32 or uint8)."""
    array = np.asarray(array)
    if array.dtype == np.float64:
        array = array.astype(np.float32)
    if array.dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported dtype {array.dtype}; use float32 or uint8")
    if array.ndim > 255:
        raise ValueError("too many dimensions")
    code = _DTYPE_CODES[array.dtype]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BBB", VERSION, code, array.ndim))
        fh.write(struct.pack(f"<{array.ndim}I", *array.shape))
        fh.write(np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes())


def load_array(path: str | Path) -> np.ndarray:
    """Read one tensor from a ULSA container."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a ULSA container (magic {magic!r})")
        version, code, ndim = struct.unpack("<BBB", fh.read(3))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        if code not in _DTYPES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        dtype = _DTYPES[code]
        payload = fh.read()
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def save_frame_sequence(path: str | Path, seq: FrameSequence) -> None:
    """Store a frame sequence, mapping intensities [-1, 1] -> [0, 1]."""
    save_array(path, ((seq.frames + 1.0) / 2.0).astype(np.float32))


def load_frame_sequence(path: str | Path, grid: Grid | None = None) -> FrameSequence:
    """Load a frame sequence, mapping intensities [0, 1] -> [-1, 1].

    Without an explicit grid, a default polar2d (or polar3d for 4D dims)
    grid is inferred from the stored dims; geometry fields take defaults.
    """
    stored = load_array(path)
    if stored.dtype != np.float32:
        raise ValueError(f"{path}: expected float32 frames, got {stored.dtype}")
    if stored.ndim == 3:
        inferred = Grid(kind="polar2d", n_ax=stored.shape[1], n_lat=stored.shape[2])
    elif stored.ndim == 4:
        inferred = Grid(
            kind="polar3d", n_ax=stored.shape[1], n_el=stored.shape[2], n_lat=stored.shape[3]
        )
    else:
        raise ValueError(f"{path}: frame sequences need 3 or 4 dims, got {stored.ndim}")
    grid = grid or inferred
    if stored.shape[1:] != grid.frame_shape:
        raise ValueError(f"{path}: dims {stored.shape} do not match grid {grid.frame_shape}")
    frames = np.clip(stored * 2.0 - 1.0, -1.0, 1.0)
    return FrameSequence(grid=grid, frames=frames)
