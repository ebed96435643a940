import math

import numpy as np
import pytest

from entrolab.covers import Cover, IntervalUnion, dyadic_partition, generating_partition
from entrolab.errors import PartitionTooCoarseError
from entrolab.estimators import separated_indices
from entrolab.measures import (
    FiniteMeasure,
    conditional_entropy,
    dirac,
    empirical_measures,
    invariance_defect,
    invariant_measures,
    iterated_partition_entropy,
    ks_entropy_over_partition,
    ks_iterate_identity,
    markov_entropy,
    misiurewicz_chain_check,
    parry_measure,
    partition_entropy,
    periodic_orbit_measure,
    pushforward_mass,
    uniform_grid_measure,
)
from entrolab.metrics import CircleArc
from entrolab.samples import grid_sample
from entrolab.systems import Circle, CircleAffine, ShiftSFT, Space, enumerate_words

CIRCLE = Space(kind="circle")
DOUBLING = CircleAffine(m=2)
FULL_SHIFT = ShiftSFT(adjacency=((1, 1), (1, 1)))
GOLDEN_MEAN = ShiftSFT(adjacency=((1, 1), (1, 0)))
HALVES = dyadic_partition(CIRCLE, 1)
QUARTERS = dyadic_partition(CIRCLE, 2)
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def _atoms(*pairs) -> FiniteMeasure:
    return FiniteMeasure.from_atoms([(Circle(x), w) for x, w in pairs])


def test_dirac_has_zero_entropy():
    assert partition_entropy(dirac(Circle(0.3)), QUARTERS) == 0.0


def test_two_halves():
    assert partition_entropy(_atoms((0.1, 0.5), (0.6, 0.5)), HALVES) == pytest.approx(math.log(2))


def test_three_unequal_cells():
    mu = _atoms((0.1, 0.5), (0.3, 0.25), (0.6, 0.25))
    assert partition_entropy(mu, QUARTERS) == pytest.approx(1.5 * math.log(2))


def test_conditional_entropy_of_independent_split():
    mu = _atoms((0.1, 0.25), (0.35, 0.25), (0.6, 0.25), (0.85, 0.25))
    assert conditional_entropy(mu, QUARTERS, HALVES) == pytest.approx(math.log(2))
    assert conditional_entropy(mu, HALVES, QUARTERS) == pytest.approx(0.0)


def test_conditional_entropy_needs_probability():
    with pytest.raises(ValueError):
        conditional_entropy(_atoms((0.1, 0.5)), QUARTERS, HALVES)


def test_close_atoms_are_merged():
    mu = _atoms((0.1, 0.25), (0.1, 0.25))
    assert len(mu) == 1
    assert mu.total == pytest.approx(0.5)
    assert not mu.is_probability


def test_mass_above_one_is_rejected():
    with pytest.raises(ValueError):
        _atoms((0.1, 0.7), (0.6, 0.7))


def test_pushforward_of_dirac():
    masses = pushforward_mass(dirac(Circle(0.3)), DOUBLING, HALVES, 1)
    assert masses.tolist() == [0.0, 1.0]


def test_non_invariant_measure_has_defect():
    mu = _atoms((0.1, 1 / 3), (0.2, 1 / 3), (0.3, 1 / 3))
    assert invariance_defect(mu, DOUBLING, HALVES) == pytest.approx(1 / 3)


def test_uniform_grid_is_invariant_for_doubling():
    mu = uniform_grid_measure(CIRCLE, 1024)
    assert invariance_defect(mu, DOUBLING, QUARTERS) == pytest.approx(0.0, abs=1e-12)
    assert iterated_partition_entropy(mu, DOUBLING, HALVES, 5) == pytest.approx(5 * math.log(2))


def test_full_shift_uniform_words():
    mu = FiniteMeasure.uniform(FULL_SHIFT.space, enumerate_words(FULL_SHIFT, 12))
    series = ks_entropy_over_partition(mu, FULL_SHIFT, generating_partition(FULL_SHIFT), 8)
    assert [e.log_count for e in series.entries] == pytest.approx(
        [n * math.log(2) for n in range(1, 9)]
    )
    assert series.fitted_rate == pytest.approx(math.log(2))
    assert not series.excluded


def test_golden_mean_parry_measure():
    mu = parry_measure(GOLDEN_MEAN, 16)
    assert mu.is_probability
    series = ks_entropy_over_partition(mu, GOLDEN_MEAN, generating_partition(GOLDEN_MEAN), 8)
    assert series.fitted_rate == pytest.approx(math.log(GOLDEN_RATIO), abs=0.02)
    assert markov_entropy(GOLDEN_MEAN) == pytest.approx(math.log(GOLDEN_RATIO))


def test_non_invariant_series_is_excluded():
    mu = _atoms((0.1, 1 / 3), (0.2, 1 / 3), (0.3, 1 / 3))
    series = ks_entropy_over_partition(mu, DOUBLING, HALVES, 4)
    assert series.excluded
    assert series.warnings


def test_ks_iterate_identity():
    mu = uniform_grid_measure(CIRCLE, 512)
    left, right = ks_iterate_identity(mu, DOUBLING, HALVES, 2, 3)
    assert left == pytest.approx(right)


def test_empirical_measures_of_one_point():
    sigma, mu = empirical_measures(np.array([[0.1]]), DOUBLING, 3)
    assert len(sigma) == 1
    assert mu.points[:, 0] == pytest.approx([0.1, 0.2, 0.4])
    assert mu.weights == pytest.approx([1 / 3] * 3)


def test_chain_check_on_doubling():
    sample = grid_sample(CIRCLE, 4096)
    separated = sample.points[separated_indices(sample, CircleArc(), DOUBLING, 6, 0.25)]
    report = misiurewicz_chain_check(
        separated, DOUBLING, QUARTERS, 6, 2, metric=CircleArc(), eps=0.25
    )
    assert report.ok
    assert report.h_sigma_n == pytest.approx(math.log(len(separated)))


def test_chain_check_rejects_coarse_partition():
    sample = grid_sample(CIRCLE, 1024)
    separated = sample.points[separated_indices(sample, CircleArc(), DOUBLING, 6, 0.25)]
    with pytest.raises(PartitionTooCoarseError):
        misiurewicz_chain_check(separated, DOUBLING, HALVES, 6, 2, metric=CircleArc(), eps=0.25)


def test_chain_check_needs_block_length_between():
    with pytest.raises(ValueError):
        misiurewicz_chain_check(
            np.array([[0.1]]), DOUBLING, QUARTERS, 6, 6, metric=CircleArc(), eps=0.25
        )


def _measure_names(sys, partition=QUARTERS):
    return [c.name for c in invariant_measures(sys, [partition], grid_size=256)]


def test_invariant_measures_keep_invariant_candidates():
    assert _measure_names(DOUBLING) == ["uniform", "dirac0"]
    assert _measure_names(CircleAffine(m=3)) == ["uniform", "dirac0", "dirac1"]
    assert _measure_names(GOLDEN_MEAN, generating_partition(GOLDEN_MEAN)) == ["parry"]


def test_rotation_falls_back_to_orbit_average():
    rotation = CircleAffine(m=1, alpha=(math.sqrt(5) - 1) / 2)
    skewed = Cover(
        CIRCLE,
        (IntervalUnion.arc(0.1, 0.45, True), IntervalUnion.arc(0.45, 0.1, True)),
        "partition",
    )
    assert _measure_names(rotation, QUARTERS) == ["uniform"]
    (candidate,) = invariant_measures(rotation, [skewed], grid_size=256, steps=8)
    assert candidate.name == "empirical"
    assert candidate.threshold == pytest.approx(1 / 8)
    assert candidate.measure.is_probability
    assert invariance_defect(candidate.measure, rotation, skewed) <= candidate.threshold


def test_invariant_measures_need_a_partition():
    with pytest.raises(ValueError):
        invariant_measures(DOUBLING, [])


def test_ks_series_window_stops_before_saturation():
    mu = uniform_grid_measure(CIRCLE, 64)
    series = ks_entropy_over_partition(mu, DOUBLING, HALVES, 8)
    assert [e.count for e in series.entries] == [2, 4, 8, 16, 32, 64, 64, 64]
    assert series.fit_window == (1, 4)
    assert series.fitted_rate == pytest.approx(math.log(2))


def test_periodic_orbit_measure_is_invariant():
    mu = periodic_orbit_measure(DOUBLING, Circle(1 / 7), 3)
    assert len(mu) == 3
    assert invariance_defect(mu, DOUBLING, QUARTERS) == pytest.approx(0.0, abs=1e-12)


def test_periodic_orbit_measure_needs_return():
    with pytest.raises(ValueError):
        periodic_orbit_measure(DOUBLING, Circle(0.1), 3)


# (numerator, denominator, period) of periodic points of the doubling map
DOUBLING_CYCLES = [(0, 1, 1), (1, 3, 2), (1, 7, 3), (1, 15, 4), (3, 31, 5)]


def _cycle_mixture(rng) -> FiniteMeasure:
    weights = rng.dirichlet(np.ones(len(DOUBLING_CYCLES)))
    cycles = [
        periodic_orbit_measure(DOUBLING, Circle(a / b), period)
        for a, b, period in DOUBLING_CYCLES
    ]
    return FiniteMeasure(
        CIRCLE,
        np.concatenate([c.points for c in cycles]),
        np.concatenate([c.weights * w for c, w in zip(cycles, weights)]),
    )


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_entropy_gain_bounded_by_conditional_entropy(seed):
    rng = np.random.default_rng(seed)
    mu = _cycle_mixture(rng)
    cuts = np.sort(rng.random(3))
    c = Cover(
        CIRCLE,
        tuple(
            IntervalUnion.arc(float(lo), float(hi), closed_left=True)
            for lo, hi in zip(cuts, np.r_[cuts[1:], cuts[0]])
        ),
        "partition",
    )
    d = dyadic_partition(CIRCLE, 2)
    gap = conditional_entropy(mu, c, d)
    for n in range(1, 7):
        lhs = iterated_partition_entropy(mu, DOUBLING, c, n)
        rhs = iterated_partition_entropy(mu, DOUBLING, d, n) + n * gap
        assert lhs <= rhs + 1e-9
