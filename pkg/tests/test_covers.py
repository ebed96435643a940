import math

import numpy as np
import pytest

from entrolab.covers import (
    ComplementOfCompact,
    Cover,
    IntervalUnion,
    Segment,
    ball_cover,
    ball_refinement_chain_check,
    build_admissible_cover,
    cover_entropy,
    dyadic_partition,
    generating_partition,
    is_admissible,
    is_symbolic_cover,
    itinerary_levels,
    iterate_cover,
    join,
    lebesgue_number,
    min_subcover,
    min_subcover_cardinality,
    refines,
    restrict,
    subcover_counts,
)
from entrolab.errors import (
    DegenerateCompactError,
    NotACoverError,
    PartitionError,
    UndecidableRefinementError,
)
from entrolab.metrics import CircleArc
from entrolab.samples import CompactBox, WitnessSample, grid_sample, random_sample, words_sample
from entrolab.systems import CircleAffine, Identity, ShiftSFT, Space

LINE = Space(kind="euclidean", dim=1)
CIRCLE = Space(kind="circle")
DOUBLING = CircleAffine(m=2)
FULL_SHIFT = ShiftSFT(adjacency=((1, 1), (1, 1)))
GOLDEN_MEAN = ShiftSFT(adjacency=((1, 1), (1, 0)))


def _intervals(*bounds, closed=True) -> Cover:
    return Cover(
        LINE, tuple(IntervalUnion.interval(lo, hi, closed_left=closed) for lo, hi in bounds)
    )


def _unit_grid(size: int = 999) -> WitnessSample:
    return WitnessSample(LINE, (np.arange(1, size + 1) / (size + 1))[:, None], "grid")


def test_refines_is_reflexive():
    a = _intervals((0.0, 0.5), (0.5, 1.0))
    assert refines(a, a)


def test_two_elements_refine_the_whole():
    assert refines(_intervals((0.0, 0.5), (0.25, 1.0)), _intervals((0.0, 1.0)))


def test_straddling_interval_does_not_refine():
    a = Cover(
        LINE,
        (IntervalUnion.interval(0.0, 0.6, True), IntervalUnion.interval(0.4, 1.0)),
    )
    assert not refines(a, _intervals((0.0, 0.5), (0.5, 1.0)))


def test_open_end_is_not_inside_closed_start():
    inner = IntervalUnion.interval(0.0, 0.5, closed_left=True)
    outer = IntervalUnion.interval(0.0, 0.5)
    assert not inner.subset(outer)
    assert outer.subset(inner)


def test_join_of_interval_partitions():
    ab = join(_intervals((0.0, 0.5), (0.5, 1.0)), _intervals((0.0, 0.25), (0.25, 1.0)))
    segments = sorted((e.segments[0] for e in ab.elements), key=lambda s: s.lo)
    assert segments == [
        Segment(0.0, 0.25, True),
        Segment(0.25, 0.5, True),
        Segment(0.5, 1.0, True),
    ]


def test_refinement_without_witness_is_undecidable():
    patch = Cover(LINE, (ComplementOfCompact(CompactBox(lower=(0.0,), upper=(1.0,))),))
    with pytest.raises(UndecidableRefinementError):
        refines(patch, _intervals((0.0, 1.0)))


def test_arc_through_zero():
    arc = IntervalUnion.arc(0.9, 1.2, closed_left=True)
    assert arc.mask(np.array([0.95, 0.1, 0.5, 0.0])).tolist() == [True, True, False, True]


def test_wrapped_arcs_share_their_cut():
    lo, cut = 0.9504636963259353, 0.14415961271963373
    wrapped = IntervalUnion.arc(lo, cut, closed_left=True)
    assert wrapped.segments[0].hi == cut
    halves = Cover(CIRCLE, (IntervalUnion.arc(cut, lo, True), wrapped), "partition")
    member = halves.check(np.array([[cut], [lo], [0.0], [0.5], [0.99]]))
    assert member.sum(axis=0).tolist() == [1, 1, 1, 1, 1]
    assert member[:, 0].tolist() == [True, False]


def test_wrapped_arc_needs_unit_endpoints():
    with pytest.raises(ValueError):
        IntervalUnion.arc(1.5, 0.2)


def test_restrict_keeps_meeting_elements():
    a = _intervals((0.0, 0.5), (0.5, 1.0), (2.0, 3.0))
    sample = WitnessSample(LINE, np.array([[0.1], [0.7]]), "explicit")
    assert len(restrict(a, sample)) == 2


def test_iterate_identity_cover_is_unchanged():
    a = dyadic_partition(CIRCLE, 2)
    sample = grid_sample(CIRCLE, 64)
    assert len(iterate_cover(a, Identity(on=CIRCLE), 4, sample)) == 4
    assert iterate_cover(a, DOUBLING, 1) is a


def test_iterated_doubling_partition():
    sample = grid_sample(CIRCLE, 256)
    iterated = iterate_cover(dyadic_partition(CIRCLE, 1), DOUBLING, 5, sample)
    assert len(iterated) == 32
    assert refines(iterated, dyadic_partition(CIRCLE, 1), sample)


@pytest.mark.parametrize("sft, expected", [(FULL_SHIFT, 8), (GOLDEN_MEAN, 5)])
def test_symbolic_iteration(sft, expected):
    assert len(iterate_cover(generating_partition(sft), sft, 3)) == expected


def test_min_subcover_drops_redundant_element():
    a = Cover(
        LINE,
        (
            IntervalUnion.interval(0.0, 0.6, True),
            IntervalUnion.interval(0.4, 1.0),
            IntervalUnion.interval(0.45, 0.55),
        ),
    )
    result = min_subcover(a, _unit_grid())
    assert result.size == 2
    assert result.chosen == (0, 1)


def test_whole_space_cover():
    whole = Cover(LINE, (IntervalUnion.whole(),))
    assert min_subcover_cardinality(whole, _unit_grid()) == 1
    assert cover_entropy(whole, _unit_grid()) == 0.0


def test_golden_mean_itineraries_on_words():
    iterated = iterate_cover(generating_partition(GOLDEN_MEAN), GOLDEN_MEAN, 4)
    assert min_subcover_cardinality(iterated, words_sample(GOLDEN_MEAN, 4)) == 8


def test_partition_entropy_of_quarters():
    assert cover_entropy(dyadic_partition(CIRCLE, 2), grid_sample(CIRCLE, 64)) == pytest.approx(
        math.log(4)
    )


def test_uncovered_point_is_reported():
    with pytest.raises(NotACoverError) as info:
        min_subcover(_intervals((0.0, 0.5)), _unit_grid(9))
    assert info.value.index == 4


def test_overlapping_partition_is_rejected():
    overlapping = Cover(
        LINE,
        (IntervalUnion.interval(0.0, 0.6, True), IntervalUnion.interval(0.4, 1.0, True)),
        "partition",
    )
    with pytest.raises(PartitionError):
        overlapping.check(_unit_grid(9).points)


def test_subcover_counts_symbolic_are_exact():
    counts = subcover_counts(generating_partition(GOLDEN_MEAN), GOLDEN_MEAN, 5)
    assert [c.size for c in counts] == [2, 3, 5, 8, 13]
    assert all(c.exact for c in counts)
    assert is_symbolic_cover(generating_partition(GOLDEN_MEAN), GOLDEN_MEAN)
    assert not is_symbolic_cover(dyadic_partition(CIRCLE, 1), DOUBLING)


def test_subcover_counts_doubling():
    counts = subcover_counts(dyadic_partition(CIRCLE, 1), DOUBLING, 6, grid_sample(CIRCLE, 512))
    assert [c.size for c in counts] == [2, 4, 8, 16, 32, 64]


def test_rays_are_not_admissible():
    rays = Cover(LINE, (IntervalUnion.interval(-math.inf, 1.0), IntervalUnion.interval(-1.0, math.inf)))
    assert not is_admissible(rays).admissible


def test_patch_makes_cover_admissible():
    cover = Cover(
        LINE,
        (
            IntervalUnion.interval(-2.0, 2.0),
            ComplementOfCompact(CompactBox(lower=(-1.0,), upper=(1.0,))),
        ),
    )
    flags = is_admissible(cover)
    assert flags.admissible
    assert not flags.strong


def test_circle_mesh_is_strongly_admissible():
    cover = build_admissible_cover(CIRCLE, delta=0.25)
    assert len(cover) == 4
    assert is_admissible(cover).strong


def test_line_mesh_has_patch():
    cover = build_admissible_cover(LINE, CompactBox(lower=(0.0,), upper=(1.0,)), 0.5)
    assert len(cover) == 4
    assert is_admissible(cover).admissible
    stretch = WitnessSample(LINE, np.linspace(-10.0, 10.0, 2001)[:, None], "grid")
    cover.check(stretch.points)


def test_degenerate_compact():
    with pytest.raises(DegenerateCompactError):
        build_admissible_cover(LINE, CompactBox(lower=(1.0,), upper=(0.0,)))


def test_dyadic_partition_of_line_has_outside_cell():
    p = dyadic_partition(LINE, 2, CompactBox(lower=(0.0,), upper=(1.0,)))
    assert len(p) == 5
    points = np.array([[-3.0], [0.0], [0.3], [0.99], [1.0], [7.0]])
    assert p.check(points).sum(axis=0).tolist() == [1] * 6


def test_ball_cover_on_sample():
    sample = grid_sample(CIRCLE, 64)
    balls = ball_cover(sample, CircleArc(), DOUBLING, 3, 0.25)
    assert len(balls) == 64
    assert min_subcover_cardinality(balls) <= 16


def test_ball_refinement_chain():
    sample = random_sample(CIRCLE, 40, seed=11)
    report = ball_refinement_chain_check(sample, CircleArc(), DOUBLING, 3, 0.25)
    assert report.ok
    low, mid, high = report.counts
    assert low <= mid <= high


def test_lebesgue_number_of_circle_mesh():
    cover = build_admissible_cover(CIRCLE, delta=0.25)
    sample = random_sample(CIRCLE, 200, seed=5)
    number = lebesgue_number(cover, sample, CircleArc(), [0.25, 0.125, 0.0625, 0.03125])
    assert number == 0.0625


def test_itineraries_with_equal_point_sets_merge():
    member = np.array(
        [[True, True, False, False], [True, True, False, False], [False, False, True, True]]
    )
    plain = [level.count for level in itinerary_levels(lambda j: member, 2, 4)]
    merged = [level.count for level in itinerary_levels(lambda j: member, 2, 4, dedupe=True)]
    assert plain == [3, 5]
    assert merged == [2, 2]


def test_point_sets_differing_in_one_point_stay_apart():
    size = 200
    member = np.ones((2, size), dtype=bool)
    member[1, size - 1] = False
    levels = list(itinerary_levels(lambda j: member, 1, size, dedupe=True))
    assert levels[0].count == 2
