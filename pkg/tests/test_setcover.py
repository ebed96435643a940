import functools
import operator
from itertools import combinations

import numpy as np
import pytest

from entrolab.setcover import bitset_from_indices, bitsets_from_masks, greedy_cover, solve_set_cover


def _bits(*members: int) -> int:
    return sum(1 << m for m in members)


# greedy takes the 4-element set first and then needs two more
TRAP = [_bits(0, 1, 2), _bits(3, 4, 5), _bits(0, 1, 3, 4)]
UNIVERSE = _bits(*range(6))


def test_bitsets_from_masks():
    masks = np.array([[True, False, True], [False, False, False]] + [[True] * 3])
    assert bitsets_from_masks(masks) == [0b101, 0, 0b111]
    assert bitsets_from_masks(np.zeros((0, 4), dtype=bool)) == []


def test_bitsets_past_one_byte():
    masks = np.zeros((1, 20), dtype=bool)
    masks[0, 17] = True
    assert bitsets_from_masks(masks) == [1 << 17]


def test_bitset_from_indices_matches_masks():
    masks = np.zeros((1, 20), dtype=bool)
    masks[0, [0, 9, 19]] = True
    assert bitset_from_indices(np.array([0, 9, 19]), 20) == bitsets_from_masks(masks)[0]
    assert bitset_from_indices(np.array([], dtype=int), 5) == 0


def test_greedy_is_not_optimal_on_trap():
    assert sorted(greedy_cover(TRAP, UNIVERSE)) == [0, 1, 2]


def test_exact_solver_beats_greedy():
    result = solve_set_cover(TRAP, UNIVERSE)
    assert result.size == 2
    assert result.chosen == (0, 1)
    assert result.exact
    assert result.method == "exact"


def test_greedy_fallback_uses_known_cover():
    result = solve_set_cover(TRAP, UNIVERSE, exact_limit=1, known_cover=[0, 1])
    assert not result.exact
    assert result.size == 2
    result = solve_set_cover(TRAP, UNIVERSE, exact_limit=1)
    assert result.size == 3
    assert result.method == "greedy"


def test_duplicates_and_empty_sets_are_ignored():
    sets = [0, _bits(0), _bits(0), _bits(1, 2), _bits(0, 1, 2)]
    result = solve_set_cover(sets, _bits(0, 1, 2))
    assert result.chosen == (4,)


def test_empty_universe():
    assert solve_set_cover([_bits(0)], 0).size == 0


def test_uncoverable_universe():
    with pytest.raises(ValueError):
        greedy_cover([_bits(0)], _bits(0, 1))


def test_random_instances_match_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        masks = rng.random((7, 9)) < 0.35
        masks[rng.integers(0, 7, size=9), np.arange(9)] = True
        sets = bitsets_from_masks(masks)
        universe = _bits(*range(9))
        best = next(
            k
            for k in range(1, 8)
            if any(
                functools.reduce(operator.or_, (sets[i] for i in combo)) == universe
                for combo in combinations(range(7), k)
            )
        )
        assert solve_set_cover(sets, universe).size == best
