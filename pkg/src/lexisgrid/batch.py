"""Array-level traversal of many segments through the selected kernel."""
from __future__ import annotations

import numpy as np

from . import _backend
from .core import GridSpec
from .errors import InvalidInputError, OutOfDomainError


def segment_arrays(segments):
    """Pack segments into ``(starts, deltas, grows)`` arrays."""
    n = len(segments)
    starts = np.empty((n, 3), dtype=np.float64)
    deltas = np.empty(n, dtype=np.float64)
    grows = np.empty(n, dtype=np.uint8)
    for s, seg in enumerate(segments):
        starts[s] = (seg.start.t, seg.start.a, seg.start.d)
        deltas[s] = seg.delta_t
        grows[s] = seg.grows_duration
    return starts, deltas, grows


def kernel(backend=None):
    """Return a traversal kernel: ``"compiled"``, ``"python"`` or the default."""
    if backend is None:
        return _backend.traverse_batch
    if backend == "python":
        return _backend.python_traverse_batch
    if backend == "compiled":
        if _backend.compiled_traverse_batch is None:
            raise RuntimeError("compiled kernel is not available in this installation")
        return _backend.compiled_traverse_batch
    raise ValueError(f"unknown backend {backend!r}")


def traverse_arrays(starts, deltas, grows, grid: GridSpec, backend=None):
    """Trace every segment described by the arrays.

    Returns ``(seg, idx, length)``: the segment number, voxel index row and
    time at risk of each visited voxel, grouped by segment in input order.
    """
    starts = np.ascontiguousarray(starts, dtype=np.float64).reshape(-1, 3)
    deltas = np.ascontiguousarray(deltas, dtype=np.float64).reshape(-1)
    grows = np.ascontiguousarray(grows, dtype=np.uint8).reshape(-1)
    if not (len(starts) == len(deltas) == len(grows)):
        raise InvalidInputError("starts, deltas and grows must have equal length")
    if not (np.isfinite(starts).all() and np.isfinite(deltas).all()):
        raise InvalidInputError("segment coordinates must be finite")
    if (deltas <= 0).any():
        raise InvalidInputError(f"segment {int(np.argmax(deltas <= 0))} has delta_t <= 0")
    origin = np.asarray(grid.origin, dtype=np.float64)
    below = (starts[:, : grid.dim] < origin[: grid.dim]).any(axis=1)
    if below.any():
        raise OutOfDomainError(f"segment {int(np.argmax(below))} starts below the grid origin")
    return kernel(backend)(starts, deltas, grows, grid.t_r, origin, grid.dim)


def traverse_segments(segments, grid: GridSpec, backend=None):
    """Batch version of :func:`lexisgrid.core.traverse`, one result list per segment."""
    seg, idx, length = traverse_arrays(*segment_arrays(segments), grid, backend=backend)
    out = [[] for _ in segments]
    for s, row, ell in zip(seg.tolist(), map(tuple, idx.tolist()), length.tolist()):
        out[s].append((row, ell))
    return out


__all__ = ["segment_arrays", "traverse_arrays", "traverse_segments", "kernel"]
