"""Minimum set cover over a finite universe.

Sets are Python ints used as bitsets over the sample indices. Up to
``EXACT_COVER_LIMIT`` distinct sets the answer is exact (branch and bound
with unit propagation); above it a lazy greedy is used and the result is
flagged as greedy.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .const import EXACT_COVER_LIMIT

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SetCoverResult:
    size: int
    chosen: tuple[int, ...]
    exact: bool

    @property
    def method(self) -> str:
        return "exact" if self.exact else "greedy"


def bitsets_from_masks(masks: np.ndarray) -> list[int]:
    """Row-wise bool matrix -> one int per row, bit i set iff column i is."""
    if masks.shape[0] == 0:
        return []
    packed = np.packbits(masks.astype(bool), axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def bitset_from_indices(index: np.ndarray, size: int) -> int:
    """Bitset over ``size`` columns with exactly the given columns set."""
    row = np.zeros(size, dtype=bool)
    row[index] = True
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _distinct(sets: Sequence[int]) -> list[int]:
    """Indices of the first occurrence of each distinct nonempty set."""
    seen: set[int] = set()
    keep = []
    for index, bits in enumerate(sets):
        if bits and bits not in seen:
            seen.add(bits)
            keep.append(index)
    return keep


def greedy_cover(sets: Sequence[int], universe: int) -> list[int]:
    """Largest-uncovered-first greedy, ties going to the lowest index."""
    uncovered = universe
    heap = [(-(bits & universe).bit_count(), index) for index, bits in enumerate(sets)]
    heapq.heapify(heap)
    chosen = []
    while uncovered:
        if not heap:
            raise ValueError("sets do not cover the universe")
        _, index = heapq.heappop(heap)
        gain = (sets[index] & uncovered).bit_count()
        if gain == 0:
            continue
        if heap and (-gain, index) > heap[0]:
            heapq.heappush(heap, (-gain, index))
            continue
        chosen.append(index)
        uncovered &= ~sets[index]
    return chosen


class BranchAndBound:
    def __init__(self, sets: Sequence[int], universe: int, incumbent: list[int]) -> None:
        self.sets = list(sets)
        self.universe = universe
        self.best = list(incumbent)
        self.nodes = 0

    def _lower_bound(self, uncovered: int) -> int:
        largest = max((s & uncovered).bit_count() for s in self.sets)
        if largest == 0:
            return len(self.best) + 1
        return -(-uncovered.bit_count() // largest)

    def _forced(self, uncovered: int) -> int | None:
        """A set that is the only one containing some uncovered point."""
        once = twice = 0
        for bits in self.sets:
            hit = bits & uncovered
            twice |= once & hit
            once |= hit
        lonely = once & ~twice
        if not lonely:
            return None
        point = lonely & -lonely
        for index, bits in enumerate(self.sets):
            if bits & point:
                return index
        return None

    def branch(self, uncovered: int, chosen: list[int]) -> None:
        self.nodes += 1
        if not uncovered:
            if len(chosen) < len(self.best):
                self.best = list(chosen)
            return
        if len(chosen) + self._lower_bound(uncovered) >= len(self.best):
            return
        forced = self._forced(uncovered)
        if forced is not None:
            candidates = [forced]
        else:
            point = uncovered & -uncovered
            candidates = [i for i, bits in enumerate(self.sets) if bits & point]
            candidates.sort(key=lambda i: (-(self.sets[i] & uncovered).bit_count(), i))
        for index in candidates:
            chosen.append(index)
            self.branch(uncovered & ~self.sets[index], chosen)
            chosen.pop()

    def run(self) -> list[int]:
        self.branch(self.universe, [])
        return sorted(self.best)


def solve_set_cover(
    sets: Sequence[int],
    universe: int,
    *,
    exact_limit: int = EXACT_COVER_LIMIT,
    known_cover: Sequence[int] | None = None,
) -> SetCoverResult:
    """Minimum number of ``sets`` whose union contains ``universe``.

    Args:
        sets: bitsets, one per cover element.
        universe: bitset of the points to cover; every point must lie in a set.
        exact_limit: largest number of distinct sets solved exactly.
        known_cover: indices of a feasible cover; the greedy answer never
            exceeds its size.

    Returns:
        SetCoverResult with indices into ``sets``.
    """
    if not universe:
        return SetCoverResult(0, (), True)
    keep = _distinct([bits & universe for bits in sets])
    reduced = [sets[i] & universe for i in keep]
    if len(reduced) <= exact_limit:
        incumbent = greedy_cover(reduced, universe)
        solver = BranchAndBound(reduced, universe, incumbent)
        best = solver.run()
        logger.debug(
            "exact set cover over %d sets: %d (%d nodes)",
            len(reduced),
            len(best),
            solver.nodes,
        )
        return SetCoverResult(len(best), tuple(keep[i] for i in best), True)
    chosen = tuple(sorted(keep[i] for i in greedy_cover(reduced, universe)))
    if known_cover is not None and len(known_cover) < len(chosen):
        chosen = tuple(sorted(known_cover))
    logger.debug("greedy set cover over %d sets: %d", len(reduced), len(chosen))
    return SetCoverResult(len(chosen), chosen, False)
