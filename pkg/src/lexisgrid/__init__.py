"""Person-time at risk in calendar time, age and duration by voxel traversal.

Life lines of cohort members are traced through a cubical grid over the
(calendar time, age, duration) Lexis space.  The time spent in each voxel
is accumulated into sparse tables that feed person-years rate estimates.
"""
from ._backend import BACKEND
from .cohort import HazardSpec, SimConfig, death_cdf, hazard, sample_death_time, simulate_cohort
from .core import (
    GridSpec,
    LexisPoint,
    LifeSegment,
    clip_length_oracle,
    crossing_count,
    merge_crossings,
    plane_crossings,
    traverse,
    voxel_index_at,
)
from .errors import LexisError
from .exposure import (
    EventTable,
    ExposureTable,
    RateTable,
    RiskSemantics,
    SubjectRecord,
    accumulate,
    bin_events,
    rates,
    risk_segments,
)
from .io import read_cohort, read_table, write_cohort, write_table

__version__ = "0.1.0"
