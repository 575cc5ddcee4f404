"""Cohort-level person-time, event counts and person-years rates.

A subject's life line may kink at disease onset: before onset it runs in
the (1, 1, 0) direction, afterwards in the (1, 1, 1) direction.  Which
piece counts as time at risk depends on the question asked:

* ``incidence`` -- the disease-free piece; events are onsets.
* ``post-onset`` -- the diseased piece; events are exits flagged as events
  (for example deaths), censored exits contribute time but no event.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .batch import traverse_arrays
from .core import DIRECTION_DISEASED, DIRECTION_HEALTHY, GridSpec, LexisPoint, LifeSegment, voxel_of_point
from .errors import ConfigurationError, InconsistencyError, OutOfDomainError, ValidationError

AGE_TOLERANCE = 1e-9


class RiskSemantics(str, enum.Enum):
    INCIDENCE = "incidence"
    POST_ONSET = "post-onset"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            raise ConfigurationError(
                f"unknown risk semantics {value!r}; expected 'incidence' or 'post-onset'"
            ) from None


@dataclass(frozen=True)
class SubjectRecord:
    """One cohort member observed from ``entry`` until ``exit_time``.

    ``onset_time`` is the calendar time of diagnosis during follow-up.  A
    subject without onset but with ``entry.d > 0`` entered already diseased.
    When an onset is recorded, the entry duration must be 0; duration then
    starts counting at onset.
    """

    id: object
    birth_time: float
    entry: LexisPoint
    exit_time: float
    onset_time: float | None = None
    event_at_exit: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        e = self.entry
        for name in ("birth_time", "exit_time"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(self.id, name, f"must be a finite number, got {value!r}")
        if self.exit_time < e.t:
            raise ValidationError(self.id, "exit_time", f"exit {self.exit_time!r} before entry {e.t!r}")
        if abs(e.a - (e.t - self.birth_time)) > AGE_TOLERANCE:
            raise ValidationError(
                self.id, "entry_age", f"entry age {e.a!r} != entry time - birth time {e.t - self.birth_time!r}"
            )
        if e.d < 0:
            raise ValidationError(self.id, "entry_duration", f"must be >= 0, got {e.d!r}")
        if self.onset_time is not None:
            onset = self.onset_time
            if not isinstance(onset, (int, float)) or not math.isfinite(onset):
                raise ValidationError(self.id, "onset_time", f"must be finite, got {onset!r}")
            if not e.t <= onset <= self.exit_time:
                raise ValidationError(self.id, "onset_time", f"onset {onset!r} outside follow-up [{e.t!r}, {self.exit_time!r}]")
            if e.d != 0:
                raise ValidationError(self.id, "entry_duration", "must be 0 when an onset during follow-up is recorded")
        if not isinstance(self.event_at_exit, (bool, np.bool_)):
            raise ValidationError(self.id, "event_at_exit", f"must be a boolean, got {self.event_at_exit!r}")

    @property
    def follow_up(self) -> float:
        return self.exit_time - self.entry.t

    @property
    def diseased_at_entry(self) -> bool:
        return self.onset_time is None and self.entry.d > 0

    @property
    def ever_diseased(self) -> bool:
        return self.onset_time is not None or self.entry.d > 0

    def _split(self):
        # time before onset, time after onset; the two add up to follow_up
        total = self.follow_up
        if self.onset_time is not None:
            before = self.onset_time - self.entry.t
            # total - x is exact for x >= total / 2 (Sterbenz), so the two
            # pieces sum to total without rounding
            if before >= 0.5 * total:
                return before, total - before
            after = total - before
            return total - after, after
        if self.entry.d > 0:
            return 0.0, total
        return total, 0.0

    def onset_point(self) -> LexisPoint | None:
        """Point where the life line turns into the (1, 1, 1) direction."""
        if not self.ever_diseased:
            return None
        before, _ = self._split()
        e = self.entry
        return LexisPoint(e.t + before, e.a + before, e.d)

    @property
    def exit(self) -> LexisPoint:
        before, after = self._split()
        e = self.entry
        if self.ever_diseased:
            return LexisPoint(e.t + before + after, e.a + before + after, e.d + after)
        return LexisPoint(e.t + before, e.a + before, e.d)


def risk_segments(subject: SubjectRecord, semantics) -> list:
    """The part of a subject's life line that is at risk under ``semantics``.

    Returns zero or one :class:`LifeSegment`.
    """
    semantics = RiskSemantics.parse(semantics)
    before, after = subject._split()
    if semantics is RiskSemantics.INCIDENCE:
        if before > 0:
            return [LifeSegment(subject.entry, before, DIRECTION_HEALTHY)]
        return []
    if subject.ever_diseased and after > 0:
        return [LifeSegment(subject.onset_point(), after, DIRECTION_DISEASED)]
    return []


def event_point(subject: SubjectRecord, semantics) -> LexisPoint | None:
    """Where the subject's qualifying event happens, or None without one."""
    semantics = RiskSemantics.parse(semantics)
    if semantics is RiskSemantics.INCIDENCE:
        if subject.onset_time is None:
            return None
        return subject.onset_point()
    if not (subject.event_at_exit and subject.ever_diseased):
        return None
    return subject.exit


def _check_dim(keys, grid):
    for key in keys:
        if len(key) != grid.dim:
            return key
    return None


@dataclass
class ExposureTable:
    """Sparse person-time per voxel."""

    grid: GridSpec
    values: dict = field(default_factory=dict)
    semantics: RiskSemantics | None = None

    def total(self) -> float:
        return math.fsum(self.values.values())

    def __add__(self, other):
        if other.grid != self.grid:
            raise ConfigurationError("cannot add exposure tables on different grids")
        out = dict(self.values)
        for key, value in other.values.items():
            out[key] = out.get(key, 0.0) + value
        return ExposureTable(self.grid, dict(sorted(out.items())), self.semantics)


@dataclass
class EventTable:
    """Sparse event counts per voxel."""

    grid: GridSpec
    counts: dict = field(default_factory=dict)
    semantics: RiskSemantics | None = None

    def total(self) -> int:
        return sum(self.counts.values())


class Rate(NamedTuple):
    rate: float
    events: int
    exposure: float


@dataclass
class RateTable:
    """Events per unit of person-time for every voxel with exposure."""

    grid: GridSpec
    entries: dict = field(default_factory=dict)
    semantics: RiskSemantics | None = None


def _collect_segments(subjects, grid, semantics):
    starts, deltas, grows = [], [], []
    for pos, subject in enumerate(subjects):
        for seg in risk_segments(subject, semantics):
            s = seg.start
            for ax, x in enumerate((s.t, s.a, s.d)[: grid.dim]):
                if x < grid.origin[ax]:
                    raise OutOfDomainError(
                        f"subject {subject.id!r} (position {pos}): risk segment starts below grid origin on axis {'tad'[ax]}"
                    )
            starts.append((s.t, s.a, s.d))
            deltas.append(seg.delta_t)
            grows.append(seg.grows_duration)
    return (
        np.asarray(starts, dtype=np.float64).reshape(-1, 3),
        np.asarray(deltas, dtype=np.float64),
        np.asarray(grows, dtype=np.uint8),
    )


def sum_by_voxel(idx, weights):
    """Add ``weights`` per distinct voxel row, in input order.

    Each voxel's total is accumulated sequentially in the order its
    contributions appear, so results are reproducible bit for bit.
    """
    if len(weights) == 0:
        return {}
    keys, inverse = np.unique(idx, axis=0, return_inverse=True)
    sums = np.bincount(inverse.reshape(-1), weights=weights, minlength=len(keys))
    return {tuple(k): v for k, v in zip(keys.tolist(), sums.tolist())}


def accumulate(subjects, grid: GridSpec, semantics, backend=None) -> ExposureTable:
    """Person-time per voxel, summed over every subject's risk segment."""
    semantics = RiskSemantics.parse(semantics)
    starts, deltas, grows = _collect_segments(subjects, grid, semantics)
    if len(deltas) == 0:
        return ExposureTable(grid, {}, semantics)
    _, idx, length = traverse_arrays(starts, deltas, grows, grid, backend=backend)
    values = sum_by_voxel(idx, length)
    return ExposureTable(grid, {k: v for k, v in values.items() if v > 0}, semantics)


def bin_events(subjects, grid: GridSpec, semantics) -> EventTable:
    """Count qualifying events in the voxel containing each event point."""
    semantics = RiskSemantics.parse(semantics)
    counts = {}
    for subject in subjects:
        point = event_point(subject, semantics)
        if point is None:
            continue
        try:
            voxel = voxel_of_point(point, grid)
        except OutOfDomainError as exc:
            raise OutOfDomainError(f"subject {subject.id!r}: event {exc}") from None
        counts[voxel] = counts.get(voxel, 0) + 1
    return EventTable(grid, dict(sorted(counts.items())), semantics)


def rates(exposure: ExposureTable, events: EventTable) -> RateTable:
    """Person-years rate e / m in every voxel with positive exposure."""
    if exposure.grid != events.grid:
        raise ConfigurationError(f"grid mismatch: exposure {exposure.grid} vs events {events.grid}")
    if exposure.semantics is not None and events.semantics is not None and exposure.semantics != events.semantics:
        raise ConfigurationError(
            f"semantics mismatch: exposure {exposure.semantics.value} vs events {events.semantics.value}"
        )
    bad = _check_dim(list(exposure.values) + list(events.counts), exposure.grid)
    if bad is not None:
        raise ConfigurationError(f"voxel {bad} does not match grid dim {exposure.grid.dim}")
    orphans = sorted(v for v, e in events.counts.items() if e > 0 and exposure.values.get(v, 0.0) <= 0)
    if orphans:
        raise InconsistencyError(orphans)
    entries = {}
    for voxel, m in sorted(exposure.values.items()):
        if m <= 0:
            continue
        e = events.counts.get(voxel, 0)
        entries[voxel] = Rate(e / m, e, m)
    return RateTable(exposure.grid, entries, exposure.semantics or events.semantics)


__all__ = [
    "RiskSemantics",
    "SubjectRecord",
    "ExposureTable",
    "EventTable",
    "RateTable",
    "Rate",
    "risk_segments",
    "event_point",
    "accumulate",
    "bin_events",
    "rates",
    "sum_by_voxel",
]
