import itertools
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lexisgrid.core import (
    DIRECTION_DISEASED,
    DIRECTION_HEALTHY,
    GridSpec,
    LexisPoint,
    LifeSegment,
    clip_length_oracle,
    crossing_count,
    merge_crossings,
    oracle_deviation,
    plane_crossings,
    traverse,
    voxel_index_at,
    voxel_of_point,
)
from lexisgrid.errors import InvalidGridError, InvalidInputError, OutOfDomainError


def bounding_box_voxels(seg, grid):
    lo = [math.floor((c - o) / grid.t_r) for c, o in zip(seg.start, grid.origin)][: grid.dim]
    hi = [math.floor((c - o) / grid.t_r) for c, o in zip(seg.end, grid.origin)][: grid.dim]
    return itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi)))


def seg(t, a, d, dt, direction=DIRECTION_DISEASED):
    return LifeSegment(LexisPoint(t, a, d), dt, direction)


# --- plane_crossings / crossing_count -------------------------------------


def test_plane_crossings_interior_start():
    # solve 0.5 + alpha * 2 = u for u = 1, 2
    expected = [(u - 0.5) / 2.0 for u in (1, 2)]
    assert plane_crossings(0.5, 2.5, 1.0, 0.0) == expected == [0.25, 0.75]


def test_plane_crossings_no_plane():
    assert plane_crossings(0.1, 0.9, 1.0, 0.0) == []


def test_plane_crossings_start_on_plane_is_excluded():
    expected = [(u - 0.0) / 2.0 for u in (1, 2)]
    assert plane_crossings(0.0, 2.0, 1.0, 0.0) == expected == [0.5, 1.0]


def test_plane_crossings_constant_axis():
    assert plane_crossings(3.0, 3.0, 1.0, 0.0) == []


def test_plane_crossings_respects_origin():
    assert plane_crossings(10.5, 12.5, 1.0, 10.0) == [0.25, 0.75]
    # relative coordinates 0 -> 3 cross only the plane at 2
    assert plane_crossings(1.0, 4.0, 2.0, 1.0) == [2.0 / 3.0]


@pytest.mark.parametrize(
    "args, exc",
    [
        ((math.nan, 1.0, 1.0, 0.0), InvalidInputError),
        ((0.0, math.inf, 1.0, 0.0), InvalidInputError),
        ((0.0, 1.0, 0.0, 0.0), InvalidGridError),
        ((0.0, 1.0, -1.0, 0.0), InvalidGridError),
        ((2.0, 1.0, 1.0, 0.0), InvalidInputError),
    ],
)
def test_plane_crossings_errors(args, exc):
    with pytest.raises(exc):
        plane_crossings(*args)
    with pytest.raises(exc):
        crossing_count(*args)


@pytest.mark.parametrize(
    "args, expected",
    [
        ((0.3, 2.3, 1.0, 0.0), math.floor(2.3) - math.floor(0.3)),
        ((0.0, 0.5, 1.0, 0.0), 0),
        ((0.0, 3.0, 1.0, 0.0), 3),
    ],
)
def test_crossing_count_examples(args, expected):
    assert crossing_count(*args) == expected


def test_crossing_count_end_on_plane_is_deduplicated_downstream():
    alphas = plane_crossings(0.0, 3.0, 1.0, 0.0)
    assert len(alphas) == 3 and alphas[-1] == 1.0
    assert merge_crossings(alphas) == (0.0, 1 / 3, 2 / 3, 1.0)


@settings(max_examples=300, deadline=None)
@given(
    start=st.floats(0.0, 100.0),
    extent=st.floats(1e-3, 30.0),
    t_r=st.floats(0.1, 10.0),
)
def test_crossing_count_matches_list_length(start, extent, t_r):
    end = start + extent
    assume(abs(end / t_r - round(end / t_r)) > 1e-9)
    assert len(plane_crossings(start, end, t_r)) == crossing_count(start, end, t_r)


@settings(max_examples=300, deadline=None)
@given(start=st.floats(0.0, 100.0), extent=st.floats(1e-3, 30.0), t_r=st.floats(0.1, 10.0))
def test_plane_crossings_land_on_planes(start, extent, t_r):
    end = start + extent
    for alpha in plane_crossings(start, end, t_r):
        x = start + alpha * extent
        q = x / t_r
        assert abs(q - round(q)) < 1e-9 * max(1.0, q)
        assert 0.0 <= alpha <= 1.0


# --- merge_crossings ------------------------------------------------------


def test_merge_worked_example():
    # t and a cross at 1, 2 (alpha .25, .75); d crosses at 1, 2 (alpha .5, 1)
    assert merge_crossings([0.25, 0.75], [0.25, 0.75], [0.5, 1.0]) == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_merge_empty():
    assert merge_crossings([], [], []) == (0.0, 1.0)


def test_merge_vertex_triplicates():
    assert merge_crossings([0.5, 1.0], [0.5, 1.0], [0.5, 1.0]) == (0.0, 0.5, 1.0)


def test_merge_collapses_near_duplicates():
    out = merge_crossings([0.3], [0.3 + 5e-13], [1.0 - 5e-13, 2e-13])
    assert out == (0.0, 0.3, 1.0)


def test_merge_rejects_bad_values():
    with pytest.raises(InvalidInputError):
        merge_crossings([1.5])
    with pytest.raises(InvalidInputError):
        merge_crossings([], [], [], [])


@given(st.lists(st.lists(st.floats(0.0, 1.0), max_size=20), min_size=0, max_size=3))
def test_merge_strictly_increasing_with_gap(lists):
    out = merge_crossings(*[sorted(v) for v in lists])
    assert out[0] == 0.0 and out[-1] == 1.0
    assert all(b - a > 1e-12 for a, b in zip(out, out[1:]))


# --- voxel_index_at / voxel_of_point --------------------------------------


def test_voxel_index_at_examples(worked_segment, unit_grid):
    assert voxel_index_at(worked_segment, 0.375, unit_grid) == (1, 1, 0)  # (1.25, 1.25, 0.75)
    assert voxel_index_at(worked_segment, 0.875, unit_grid) == (2, 2, 1)  # (2.25, 2.25, 1.75)
    assert voxel_index_at(seg(0, 0, 0, 3.0), 0.0, unit_grid) == (0, 0, 0)


def test_voxel_index_at_dim2_drops_duration(worked_segment):
    assert voxel_index_at(worked_segment, 0.875, GridSpec(1.0, 2)) == (2, 2)


def test_voxel_index_below_origin():
    grid = GridSpec(1.0, 3, (5.0, 0.0, 0.0))
    with pytest.raises(OutOfDomainError):
        voxel_index_at(seg(1.0, 1.0, 0.0, 1.0), 0.5, grid)
    with pytest.raises(OutOfDomainError):
        voxel_of_point(LexisPoint(4.0, 1.0, 0.0), grid)


def test_voxel_of_point_half_open():
    grid = GridSpec(5.0)
    assert voxel_of_point(LexisPoint(4.0, 60.0, 0.0), grid) == (0, 12, 0)
    assert voxel_of_point(LexisPoint(5.0, 59.999, 0.0), grid) == (1, 11, 0)


# --- traverse -------------------------------------------------------------


def test_traverse_worked_example(worked_segment, unit_grid):
    assert traverse(worked_segment, unit_grid) == [
        ((0, 0, 0), 0.5),
        ((1, 1, 0), 0.5),
        ((1, 1, 1), 0.5),
        ((2, 2, 1), 0.5),
    ]


def test_traverse_worked_example_matches_slab_enumeration(worked_segment, unit_grid):
    # the 3 x 3 x 2 candidate block around the segment
    oracle = {}
    for v in itertools.product(range(3), range(3), range(2)):
        ell = clip_length_oracle(worked_segment, v, unit_grid)
        if ell > 0:
            oracle[v] = ell
    assert oracle == dict(traverse(worked_segment, unit_grid))


def test_traverse_single_voxel(unit_grid):
    assert traverse(seg(0.1, 0.1, 0.1, 0.1), unit_grid) == [((0, 0, 0), 0.1)]


def test_traverse_body_diagonal_through_vertex(unit_grid):
    s = seg(0.0, 0.0, 0.0, 2.0)
    assert traverse(s, unit_grid) == [((0, 0, 0), 1.0), ((1, 1, 1), 1.0)]
    for v in itertools.product(range(2), repeat=3):
        if v not in ((0, 0, 0), (1, 1, 1)):
            assert clip_length_oracle(s, v, unit_grid) == 0.0


def test_traverse_healthy_line_constant_duration(unit_grid):
    s = seg(0.5, 0.5, 0.0, 2.0, DIRECTION_HEALTHY)
    assert traverse(s, unit_grid) == [((0, 0, 0), 0.5), ((1, 1, 0), 1.0), ((2, 2, 0), 0.5)]


def test_traverse_lengths_are_person_time_not_euclidean(unit_grid):
    s = seg(0.25, 0.25, 0.25, 0.5)
    assert traverse(s, unit_grid) == [((0, 0, 0), 0.5)]


def test_traverse_below_origin():
    with pytest.raises(OutOfDomainError):
        traverse(seg(0.0, 0.0, 0.0, 1.0), GridSpec(1.0, 3, (0.5, 0.0, 0.0)))


# --- clip_length_oracle ---------------------------------------------------


def test_clip_oracle_examples(worked_segment, unit_grid):
    assert clip_length_oracle(worked_segment, (1, 1, 0), unit_grid) == 0.5
    assert clip_length_oracle(worked_segment, (40, 0, 7), unit_grid) == 0.0
    assert clip_length_oracle(seg(0, 0, 0, 2.0), (1, 0, 0), unit_grid) == 0.0


# --- types ----------------------------------------------------------------


def test_life_segment_invariants():
    s = seg(1.0, 2.0, 3.0, 4.0, DIRECTION_HEALTHY)
    assert s.end == LexisPoint(5.0, 6.0, 3.0)
    assert s.end.t - s.start.t == s.end.a - s.start.a == s.delta_t
    with pytest.raises(InvalidInputError):
        seg(0, 0, 0, 0.0)
    with pytest.raises(InvalidInputError):
        LifeSegment(LexisPoint(0, 0, 0), 1.0, (1, 0, 0))
    with pytest.raises(InvalidInputError):
        LexisPoint(0.0, math.nan)


def test_grid_spec_validation():
    assert GridSpec(5).origin == (0.0, 0.0, 0.0)
    assert GridSpec(5, 2, (1.0, 2.0)).origin == (1.0, 2.0, 0.0)
    for bad in (dict(t_r=0), dict(t_r=-1), dict(t_r=math.inf), dict(t_r=1, dim=4), dict(t_r=1, origin=(1,))):
        with pytest.raises(InvalidGridError):
            GridSpec(**bad)


# --- properties -----------------------------------------------------------

dyadic_tr = st.sampled_from([0.125, 0.25, 0.5, 1.0, 2.0, 5.0])
any_tr = st.one_of(dyadic_tr, st.floats(0.1, 10.0))
coord = st.one_of(st.integers(0, 400).map(lambda k: k / 8), st.floats(0.0, 100.0))
extent = st.one_of(st.integers(1, 160).map(lambda k: k / 8), st.floats(1e-3, 20.0))
direction = st.sampled_from([DIRECTION_HEALTHY, DIRECTION_DISEASED])


@st.composite
def segments(draw):
    return LifeSegment(LexisPoint(draw(coord), draw(coord), draw(coord)), draw(extent), draw(direction))


@settings(max_examples=400, deadline=None)
@given(s=segments(), t_r=any_tr, dim=st.sampled_from([2, 3]))
def test_conservation_and_positivity(s, t_r, dim):
    res = traverse(s, GridSpec(t_r, dim))
    assert all(ell > 0 for _, ell in res)
    assert math.isclose(sum(ell for _, ell in res), s.delta_t, rel_tol=1e-9)
    voxels = [v for v, _ in res]
    assert len(set(voxels)) == len(voxels)


@settings(max_examples=300, deadline=None)
@given(s=segments(), t_r=any_tr)
def test_oracle_equivalence_bounding_box(s, t_r):
    grid = GridSpec(t_r, 3)
    assume(s.delta_t / t_r <= 12)
    got = dict(traverse(s, grid))
    for v in bounding_box_voxels(s, grid):
        assert abs(clip_length_oracle(s, v, grid) - got.get(tuple(v), 0.0)) <= 1e-9 * s.delta_t
    assert oracle_deviation(s, traverse(s, grid), grid) <= 1e-9 * s.delta_t


@settings(max_examples=300, deadline=None)
@given(s=segments(), t_r=any_tr)
def test_monotone_visitation(s, t_r):
    res = traverse(s, GridSpec(t_r, 3))
    for (v0, _), (v1, _) in zip(res, res[1:]):
        assert all(b >= a for a, b in zip(v0, v1))


@settings(max_examples=200, deadline=None)
@given(
    s=segments(),
    t_r=dyadic_tr,
    shift=st.tuples(*[st.integers(0, 64).map(lambda k: k * 0.5)] * 3),
)
def test_translation_covariance(s, t_r, shift):
    # dyadic shifts keep every coordinate difference exact
    assume(all(c == round(c * 8) / 8 for c in s.start) and s.delta_t == round(s.delta_t * 8) / 8)
    moved = LifeSegment(LexisPoint(*(c + v for c, v in zip(s.start, shift))), s.delta_t, s.direction)
    assert traverse(moved, GridSpec(t_r, 3, shift)) == traverse(s, GridSpec(t_r, 3))


@settings(max_examples=200, deadline=None)
@given(s=segments(), t_r=any_tr, power=st.integers(-3, 3))
def test_scaling_covariance(s, t_r, power):
    scale = 2.0**power  # exact in binary floating point
    scaled = LifeSegment(LexisPoint(*(c * scale for c in s.start)), s.delta_t * scale, s.direction)
    base = traverse(s, GridSpec(t_r, 3))
    assert traverse(scaled, GridSpec(t_r * scale, 3)) == [(v, ell * scale) for v, ell in base]


@settings(max_examples=200, deadline=None)
@given(s=segments(), t_r=any_tr, origin_d=st.floats(0.0, 5.0))
def test_degenerate_duration_axis(s, t_r, origin_d):
    healthy = LifeSegment(s.start, s.delta_t, DIRECTION_HEALTHY)
    assume(healthy.start.d >= origin_d)
    grid = GridSpec(t_r, 3, (0.0, 0.0, origin_d))
    k = math.floor((healthy.start.d - origin_d) / t_r)
    assert all(v[2] == k for v, _ in traverse(healthy, grid))


@settings(max_examples=200, deadline=None)
@given(s=segments(), t_r=any_tr)
def test_dim2_equals_dim3_projection_for_healthy_lines(s, t_r):
    healthy = LifeSegment(s.start, s.delta_t, DIRECTION_HEALTHY)
    three = traverse(healthy, GridSpec(t_r, 3))
    two = traverse(healthy, GridSpec(t_r, 2))
    assert two == [(v[:2], ell) for v, ell in three]
