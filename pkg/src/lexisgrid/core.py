"""Geometric engine: life lines traced through a cubical voxel grid.

A life line moves with slope one in calendar time and age, and either
keeps its duration coordinate fixed (direction (1, 1, 0)) or lets it grow
at the same rate (direction (1, 1, 1)).  Tracing such a line through the
grid means finding the parameters where it crosses the grid planes,
sorting them, and reading off one time-at-risk length per visited voxel.

Every routine here works on a single segment and favours clarity.  The
batch kernels in :mod:`lexisgrid._kernels` (compiled) and
:mod:`lexisgrid._pykernels` (pure Python) repeat the same arithmetic,
operation for operation, so that both produce bit-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidGridError, InvalidInputError, OutOfDomainError

#: Crossing parameters closer than this are one crossing (edge / vertex hits).
ALPHA_EPS = 1e-12

DIRECTION_HEALTHY = (1, 1, 0)
DIRECTION_DISEASED = (1, 1, 1)

VoxelIndex = tuple  # (i, j) or (i, j, k)
CrossingSet = tuple  # 0 = alpha_1 < ... < alpha_P = 1
TraversalResult = list  # [(VoxelIndex, length), ...] in traversal order


def _check_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LexisPoint:
    """A point (calendar time, age, duration) in the Lexis space."""

    t: float
    a: float
    d: float = 0.0

    def __post_init__(self):
        _check_finite(t=self.t, a=self.a, d=self.d)

    def __iter__(self):
        return iter((self.t, self.a, self.d))


@dataclass(frozen=True)
class GridSpec:
    """Cubical voxel partition with edge length ``t_r``.

    ``dim == 2`` ignores the duration axis.  ``origin`` shifts the grid on
    each axis; coordinates below the origin are outside the domain.
    """

    t_r: float
    dim: int = 3
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not isinstance(self.t_r, (int, float)) or not math.isfinite(self.t_r) or self.t_r <= 0:
            raise InvalidGridError(f"t_r must be finite and > 0, got {self.t_r!r}")
        if self.dim not in (2, 3):
            raise InvalidGridError(f"dim must be 2 or 3, got {self.dim!r}")
        origin = tuple(float(o) for o in self.origin)
        if len(origin) == 2:
            origin = origin + (0.0,)
        if len(origin) != 3 or not all(math.isfinite(o) for o in origin):
            raise InvalidGridError(f"origin must hold 2 or 3 finite values, got {self.origin!r}")
        object.__setattr__(self, "t_r", float(self.t_r))
        object.__setattr__(self, "origin", origin)


@dataclass(frozen=True)
class LifeSegment:
    """A straight piece of a life line.

    The end point is built from ``start``, ``delta_t`` and ``direction`` so
    that the calendar-time and age extents are equal by construction.
    """

    start: LexisPoint
    delta_t: float
    direction: tuple = DIRECTION_HEALTHY
    end: LexisPoint = field(init=False)

    def __post_init__(self):
        _check_finite(delta_t=self.delta_t)
        if self.delta_t <= 0:
            raise InvalidInputError(f"delta_t must be > 0, got {self.delta_t!r}")
        direction = tuple(self.direction)
        if direction not in (DIRECTION_HEALTHY, DIRECTION_DISEASED):
            raise InvalidInputError(f"direction must be (1,1,0) or (1,1,1), got {self.direction!r}")
        object.__setattr__(self, "direction", direction)
        s = self.start
        dt = self.delta_t
        end = LexisPoint(s.t + dt, s.a + dt, s.d + dt if direction[2] else s.d)
        object.__setattr__(self, "end", end)

    @property
    def grows_duration(self) -> bool:
        return self.direction[2] == 1


def plane_crossings(start_coord, end_coord, t_r, origin_coord=0.0):
    """Parameters in (0, 1] where one axis of a segment meets a grid plane.

    With ``x0 = start_coord - origin_coord``, the u-th crossing is at
    ``(u * t_r - x0 mod t_r) / (end_coord - start_coord)`` for
    ``u = 1 .. crossing_count(...)``.  The modulo is the floored remainder
    ``x0 - floor(x0 / t_r) * t_r`` so that it agrees with the count.
    The plane through the start point (parameter 0) is never listed.
    """
    _check_finite(start_coord=start_coord, end_coord=end_coord, t_r=t_r, origin_coord=origin_coord)
    if t_r <= 0:
        raise InvalidGridError(f"t_r must be > 0, got {t_r!r}")
    if end_coord < start_coord:
        raise InvalidInputError("end_coord must not be below start_coord")
    extent = end_coord - start_coord
    if extent <= 0:
        return []
    x0 = start_coord - origin_coord
    x1 = end_coord - origin_coord
    n0 = math.floor(x0 / t_r)
    count = math.floor(x1 / t_r) - n0
    rem = x0 - n0 * t_r
    out = []
    for u in range(1, count + 1):
        alpha = (u * t_r - rem) / extent
        out.append(min(max(alpha, 0.0), 1.0))
    return out


def crossing_count(start_coord, end_coord, t_r, origin_coord=0.0) -> int:
    """Number of grid planes in ``(start_coord, end_coord]`` on one axis."""
    _check_finite(start_coord=start_coord, end_coord=end_coord, t_r=t_r, origin_coord=origin_coord)
    if t_r <= 0:
        raise InvalidGridError(f"t_r must be > 0, got {t_r!r}")
    if end_coord < start_coord:
        raise InvalidInputError("end_coord must not be below start_coord")
    if end_coord == start_coord:
        return 0
    x0 = start_coord - origin_coord
    x1 = end_coord - origin_coord
    return math.floor(x1 / t_r) - math.floor(x0 / t_r)


def merge_crossings(*axis_lists: Sequence[float], eps: float = ALPHA_EPS) -> CrossingSet:
    """Sorted union of per-axis crossings with 0 and 1 adjoined.

    Values within ``eps`` of a value already kept (or of 0 or 1) collapse
    into it, so consecutive gaps of the result all exceed ``eps``.
    """
    if len(axis_lists) > 3:
        raise InvalidInputError("at most three axis lists")
    merged = []
    for values in axis_lists:
        for v in values:
            _check_finite(alpha=v)
            if v < 0.0 or v > 1.0:
                raise InvalidInputError(f"crossing parameter {v!r} outside [0, 1]")
            merged.append(v)
    merged.sort()
    kept = [0.0]
    last = 0.0
    for v in merged:
        if v - last <= eps or 1.0 - v <= eps:
            continue
        kept.append(v)
        last = v
    kept.append(1.0)
    return tuple(kept)


def _active_axes(grid: GridSpec):
    return range(grid.dim)


def voxel_index_at(segment: LifeSegment, alpha: float, grid: GridSpec) -> VoxelIndex:
    """Voxel holding the point at parameter ``alpha`` of ``segment``.

    Cells are half-open, so a point on a plane belongs to the upper cell.
    """
    _check_finite(alpha=alpha)
    if alpha < 0.0 or alpha > 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha!r}")
    start = tuple(segment.start)
    end = tuple(segment.end)
    index = []
    for ax in _active_axes(grid):
        x = (start[ax] - grid.origin[ax]) + alpha * (end[ax] - start[ax])
        if x < 0.0:
            raise OutOfDomainError(f"point below grid origin on axis {'tad'[ax]}: {x + grid.origin[ax]!r}")
        index.append(math.floor(x / grid.t_r))
    return tuple(index)


def voxel_of_point(point: LexisPoint, grid: GridSpec) -> VoxelIndex:
    """Voxel containing a single point (half-open cells)."""
    index = []
    for ax, x in zip(_active_axes(grid), point):
        x = x - grid.origin[ax]
        if x < 0.0:
            raise OutOfDomainError(f"point below grid origin on axis {'tad'[ax]}: {x + grid.origin[ax]!r}")
        index.append(math.floor(x / grid.t_r))
    return tuple(index)


def crossing_set(segment: LifeSegment, grid: GridSpec) -> CrossingSet:
    """All crossing parameters of ``segment`` on the grid's active axes."""
    start = tuple(segment.start)
    end = tuple(segment.end)
    lists = [plane_crossings(start[ax], end[ax], grid.t_r, grid.origin[ax]) for ax in _active_axes(grid)]
    return merge_crossings(*lists)


def traverse(segment: LifeSegment, grid: GridSpec) -> TraversalResult:
    """Time at risk of ``segment`` in every voxel it passes through.

    Each gap between consecutive crossings is assigned to the voxel at the
    gap's midpoint and carries ``gap * delta_t`` units of person-time.
    """
    for ax in _active_axes(grid):
        if tuple(segment.start)[ax] < grid.origin[ax]:
            raise OutOfDomainError(f"segment starts below grid origin on axis {'tad'[ax]}")
    alphas = crossing_set(segment, grid)
    out = []
    for lo, hi in zip(alphas[:-1], alphas[1:]):
        gap = hi - lo
        if gap <= ALPHA_EPS:
            continue
        voxel = voxel_index_at(segment, 0.5 * (lo + hi), grid)
        length = gap * segment.delta_t
        if out and out[-1][0] == voxel:
            # rounding may split one voxel across two gaps
            out[-1] = (voxel, out[-1][1] + length)
        else:
            out.append((voxel, length))
    return out


def clip_length_oracle(segment: LifeSegment, voxel: Iterable[int], grid: GridSpec) -> float:
    """Exact time the segment spends in one voxel, by slab clipping.

    Intersects the per-axis parameter intervals in which the segment lies
    inside the voxel's slabs.  Shares no code with :func:`traverse`.
    """
    voxel = tuple(int(v) for v in voxel)
    if len(voxel) != grid.dim:
        raise InvalidInputError(f"voxel {voxel} does not match grid dim {grid.dim}")
    start = tuple(segment.start)
    end = tuple(segment.end)
    lo_alpha, hi_alpha = 0.0, 1.0
    for ax in range(grid.dim):
        x0 = start[ax] - grid.origin[ax]
        extent = end[ax] - start[ax]
        if extent > 0:
            lo = voxel[ax] * grid.t_r
            lo_alpha = max(lo_alpha, (lo - x0) / extent)
            hi_alpha = min(hi_alpha, (lo + grid.t_r - x0) / extent)
        elif math.floor(x0 / grid.t_r) != voxel[ax]:
            return 0.0
    return max(0.0, hi_alpha - lo_alpha) * segment.delta_t


def oracle_deviation(segment: LifeSegment, result, grid: GridSpec) -> float:
    """Largest disagreement between a traversal result and slab clipping.

    Compares every reported voxel with :func:`clip_length_oracle`.  Because
    the voxels partition the segment, any time the oracle places outside the
    reported voxels shows up as ``delta_t`` minus the oracle total over them.
    """
    worst = 0.0
    oracle_total = 0.0
    for voxel, length in result:
        exact = clip_length_oracle(segment, voxel, grid)
        oracle_total += exact
        worst = max(worst, abs(exact - length))
    return max(worst, abs(segment.delta_t - oracle_total))
