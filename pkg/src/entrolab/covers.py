"""Covers, partitions and the refinement lattice on witness samples.

Elements answer membership for a whole batch at once. Interval unions, boxes
and cylinders also support exact subset and intersection tests, so the
lattice operations are exact for them; everything else is decided on a
witness sample, which makes every count a lower bound of the continuum one.

Iteration under T is done on incidence pairs (itinerary, point): going from
level n to n + 1 every pair is extended by the elements that contain
T^n x. Itineraries with the same point set are interchangeable for the
minimal subcover, so the growth kernel keeps one of them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Literal, NamedTuple, Sequence

import numpy as np

from .const import EXACT_COVER_LIMIT
from .errors import (
    NotACoverError,
    PartitionError,
    UndecidableRefinementError,
    WrongSpaceError,
)
from .metrics import Metric, NeighborIndex, Stereographic, dn_ball
from .samples import CompactBox, WitnessSample
from .setcover import SetCoverResult, bitsets_from_masks, solve_set_cover
from .systems import (
    DynamicalSystem,
    OrbitTable,
    Point,
    ShiftSFT,
    Space,
    admissible_words,
    enumerate_words,
    space_of,
)

logger = logging.getLogger(__name__)

INF = float("inf")


# Elements


class CoverElement:
    """A subset of the state space with a batch membership test."""

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x: Point) -> bool:
        return bool(self.contains_batch(space_of(x).batch([x]))[0])

    def complement_compact(self, space: Space) -> bool:
        return space.compact

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    closed_left: bool = False

    def mask(self, x: np.ndarray) -> np.ndarray:
        above = (x >= self.lo) if self.closed_left else (x > self.lo)
        return above & (x < self.hi)


def _merge(segments: Sequence[Segment]) -> list[Segment]:
    """Maximal connected pieces of a union of segments."""
    merged: list[Segment] = []
    for seg in sorted(segments, key=lambda s: (s.lo, not s.closed_left)):
        if merged:
            last = merged[-1]
            if seg.lo < last.hi or (seg.lo == last.hi and seg.closed_left):
                if seg.hi > last.hi:
                    merged[-1] = Segment(last.lo, seg.hi, last.closed_left)
                continue
        merged.append(seg)
    return merged


def _segment_within(inner: Segment, outer: Segment) -> bool:
    if inner.lo < outer.lo:
        return False
    if inner.lo == outer.lo and inner.closed_left and not outer.closed_left:
        return False
    return inner.hi <= outer.hi


def _segment_meet(a: Segment, b: Segment) -> Segment | None:
    if a.lo > b.lo:
        lo, closed = a.lo, a.closed_left
    elif b.lo > a.lo:
        lo, closed = b.lo, b.closed_left
    else:
        lo, closed = a.lo, a.closed_left and b.closed_left
    hi = min(a.hi, b.hi)
    if lo >= hi:
        return None
    return Segment(lo, hi, closed)


@dataclass(frozen=True)
class IntervalUnion(CoverElement):
    """Finite union of intervals (lo, hi) or [lo, hi) of the line or the circle.

    Arcs of the circle are stored as segments of [0, 1]; an arc through 0 is
    split in two and the piece starting at 0 is closed there.
    """

    segments: tuple[Segment, ...]
    circle: bool = False

    def __post_init__(self) -> None:
        segments = tuple(
            Segment(s.lo, s.hi, s.closed_left and s.lo > -INF)
            for s in self.segments
            if s.lo < s.hi
        )
        object.__setattr__(self, "segments", segments)

    @classmethod
    def interval(
        cls, lo: float, hi: float, closed_left: bool = False
    ) -> IntervalUnion:
        return cls((Segment(lo, hi, closed_left),))

    @classmethod
    def arc(cls, lo: float, hi: float, closed_left: bool = False) -> IntervalUnion:
        """Arc from ``lo`` to ``hi`` in angle units.

        ``hi < lo`` with both in [0, 1) is an arc through 0 whose endpoints are
        kept as given, so arcs cut from the same points share their ends.
        """
        if hi < lo:
            if not (0.0 <= hi < 1.0 and 0.0 <= lo < 1.0):
                raise ValueError(f"wrapped arc needs endpoints in [0, 1), got {lo}, {hi}")
            return cls(
                (Segment(0.0, hi, True), Segment(lo, 1.0, closed_left)),
                circle=True,
            )
        if hi - lo >= 1.0:
            return cls((Segment(0.0, 1.0, True),), circle=True)
        turns = math.floor(lo)
        lo, hi = lo - turns, hi - turns
        if hi <= 1.0:
            return cls((Segment(lo, hi, closed_left),), circle=True)
        return cls(
            (Segment(0.0, hi - 1.0, True), Segment(lo, 1.0, closed_left)),
            circle=True,
        )

    @classmethod
    def whole(cls, circle: bool = False) -> IntervalUnion:
        if circle:
            return cls((Segment(0.0, 1.0, True),), circle=True)
        return cls((Segment(-INF, INF),))

    @property
    def empty(self) -> bool:
        return not self.segments

    @property
    def components(self) -> list[Segment]:
        return _merge(self.segments)

    def mask(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=bool)
        for seg in self.segments:
            out |= seg.mask(x)
        return out

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        return self.mask(batch[:, 0])

    def subset(self, other: IntervalUnion) -> bool:
        pieces = other.components
        return all(any(_segment_within(s, p) for p in pieces) for s in self.segments)

    def intersect(self, other: IntervalUnion) -> IntervalUnion:
        meets = [_segment_meet(a, b) for a in self.segments for b in other.segments]
        return IntervalUnion(tuple(m for m in meets if m is not None), self.circle)

    def complement_compact(self, space: Space) -> bool:
        if space.compact:
            return True
        pieces = self.components
        if not pieces or pieces[0].lo > -INF or pieces[-1].hi < INF:
            return False
        # the complement is closed only if no finite left end is included
        return not any(p.closed_left for p in pieces if p.lo > -INF)

    def describe(self) -> dict:
        return {
            "kind": "arcs" if self.circle else "intervals",
            "segments": [[s.lo, s.hi, s.closed_left] for s in self.segments],
        }


@dataclass(frozen=True)
class Box(CoverElement):
    """Product of interval unions, one per coordinate."""

    factors: tuple[IntervalUnion, ...]

    @property
    def empty(self) -> bool:
        return any(f.empty for f in self.factors)

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        out = np.ones(len(batch), dtype=bool)
        for axis, factor in enumerate(self.factors):
            out &= factor.mask(batch[:, axis])
        return out

    def subset(self, other: Box) -> bool:
        if self.empty:
            return True
        return all(a.subset(b) for a, b in zip(self.factors, other.factors))

    def intersect(self, other: Box) -> Box:
        return Box(tuple(a.intersect(b) for a, b in zip(self.factors, other.factors)))

    def complement_compact(self, space: Space) -> bool:
        if space.compact:
            return True
        if len(self.factors) == 1:
            return self.factors[0].complement_compact(space)
        return all(f.components == [Segment(-INF, INF)] for f in self.factors)

    def describe(self) -> dict:
        return {"kind": "box", "factors": [f.describe() for f in self.factors]}


@dataclass(frozen=True)
class Cylinder(CoverElement):
    """Words starting with ``symbols``."""

    symbols: tuple[int, ...]
    alphabet: int

    @property
    def depth(self) -> int:
        return len(self.symbols)

    @property
    def empty(self) -> bool:
        return False

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        if batch.shape[1] < self.depth:
            raise ValueError(
                f"words of length {batch.shape[1]} are too short for a "
                f"depth {self.depth} cylinder"
            )
        return (batch[:, : self.depth] == np.asarray(self.symbols)).all(axis=1)

    def subset(self, other: Cylinder) -> bool:
        return self.symbols[: other.depth] == other.symbols

    def intersect(self, other: Cylinder) -> Cylinder | None:
        if self.subset(other):
            return self
        if other.subset(self):
            return other
        return None

    def describe(self) -> dict:
        return {"kind": "cylinder", "symbols": list(self.symbols)}


@dataclass(frozen=True)
class Ball(CoverElement):
    """Open ball of a metric already bound to its space."""

    metric: Metric
    center: tuple[float, ...]
    radius: float

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        center = np.asarray(self.center, dtype=batch.dtype)[None]
        return self.metric.pairwise(batch, center) < self.radius

    def complement_compact(self, space: Space) -> bool:
        if space.compact:
            return True
        if isinstance(self.metric, Stereographic):
            # chordal distance from the center to the point at infinity
            gap = 2.0 / math.sqrt(1.0 + sum(c * c for c in self.center))
            return gap < self.radius
        return False

    def describe(self) -> dict:
        return {
            "kind": "ball",
            "metric": self.metric.describe(),
            "center": list(self.center),
            "radius": self.radius,
        }


@dataclass(frozen=True)
class DynamicalBall(CoverElement):
    """Open d_n-ball of a bound metric."""

    metric: Metric
    system: DynamicalSystem
    n: int
    center: tuple[float, ...]
    radius: float

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        center = np.asarray(self.center, dtype=batch.dtype)[None]
        table = OrbitTable.build(self.system, np.concatenate([center, batch]), self.n)
        return self.metric.iterated_row(table, 0, self.n)[1:] < self.radius

    def describe(self) -> dict:
        return {
            "kind": "dynamical_ball",
            "n": self.n,
            "center": list(self.center),
            "radius": self.radius,
        }


@dataclass(frozen=True)
class ComplementOfCompact(CoverElement):
    """X minus a closed box: the patch at infinity of an admissible cover."""

    compact: CompactBox

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        return ~self.compact.mask(batch)

    def complement_compact(self, space: Space) -> bool:
        return True

    def describe(self) -> dict:
        return {"kind": "complement", "compact": self.compact.describe()}


@dataclass(frozen=True)
class Outside(CoverElement):
    """X minus the half-open box [lower, upper); the last cell of a grid partition."""

    compact: CompactBox

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        lower = np.asarray(self.compact.lower)
        upper = np.asarray(self.compact.upper)
        return ~((batch >= lower) & (batch < upper)).all(axis=1)

    def describe(self) -> dict:
        return {"kind": "outside", "compact": self.compact.describe()}


@dataclass(frozen=True)
class Meet(CoverElement):
    parts: tuple[CoverElement, ...]

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        out = np.ones(len(batch), dtype=bool)
        for part in self.parts:
            out &= part.contains_batch(batch)
        return out

    def complement_compact(self, space: Space) -> bool:
        return all(p.complement_compact(space) for p in self.parts)

    def describe(self) -> dict:
        return {"kind": "meet", "parts": [p.describe() for p in self.parts]}


@dataclass(frozen=True)
class Itinerary(CoverElement):
    """A_{i_0} ∩ T^-1 A_{i_1} ∩ ... ∩ T^-(n-1) A_{i_(n-1)} over ``base``."""

    base: tuple[CoverElement, ...]
    system: DynamicalSystem
    indices: tuple[int, ...]

    def contains_batch(self, batch: np.ndarray) -> np.ndarray:
        out = np.ones(len(batch), dtype=bool)
        current = batch
        for j, index in enumerate(self.indices):
            out &= self.base[index].contains_batch(current)
            if j + 1 < len(self.indices):
                current = self.system.step(current)
        return out

    def complement_compact(self, space: Space) -> bool:
        if space.compact:
            return True
        return len(self.indices) == 1 and self.base[self.indices[0]].complement_compact(
            space
        )

    def describe(self) -> dict:
        return {"kind": "itinerary", "indices": list(self.indices)}


_SYMBOLIC = (IntervalUnion, Box, Cylinder)


def _symbolic_pair(a: CoverElement, b: CoverElement) -> bool:
    if type(a) is not type(b) or not isinstance(a, _SYMBOLIC):
        return False
    if isinstance(a, IntervalUnion):
        return a.circle == b.circle
    if isinstance(a, Box):
        return len(a.factors) == len(b.factors)
    return True


# Covers


@dataclass(frozen=True, eq=False)
class Cover:
    """A finite family of elements covering (or partitioning) a witness sample.

    ``supports`` optionally caches, per element, the bitset of the witness
    points it contains.
    """

    space: Space
    elements: tuple[CoverElement, ...]
    kind: Literal["cover", "partition"] = "cover"
    witness: WitnessSample | None = None
    supports: tuple[int, ...] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def is_partition(self) -> bool:
        return self.kind == "partition"

    def membership(self, batch: np.ndarray) -> np.ndarray:
        """Bool matrix (elements, points)."""
        if not self.elements:
            return np.zeros((0, len(batch)), dtype=bool)
        return np.stack([e.contains_batch(batch) for e in self.elements])

    def check(self, batch: np.ndarray) -> np.ndarray:
        """Membership matrix, after checking the cover (or partition) property."""
        member = self.membership(batch)
        hits = member.sum(axis=0)
        uncovered = np.flatnonzero(hits == 0)
        if uncovered.size:
            i = int(uncovered[0])
            if self.is_partition:
                raise PartitionError(self.space.point(batch[i]), 0)
            raise NotACoverError(self.space.point(batch[i]), i)
        if self.is_partition:
            shared = np.flatnonzero(hits > 1)
            if shared.size:
                i = int(shared[0])
                raise PartitionError(self.space.point(batch[i]), int(hits[i]))
        return member

    def with_witness(self, sample: WitnessSample) -> Cover:
        member = self.check(sample.points)
        return Cover(
            self.space, self.elements, self.kind, sample, tuple(bitsets_from_masks(member))
        )

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "size": len(self),
            "elements": [e.describe() for e in self.elements],
        }


def _same_space(a: Cover, b: Cover) -> None:
    if a.space != b.space:
        raise WrongSpaceError(a.space.label, b.space.label)


def _sample_for(*covers: Cover, sample: WitnessSample | None = None) -> WitnessSample | None:
    if sample is not None:
        return sample
    for cover in covers:
        if cover.witness is not None:
            return cover.witness
    return None


def refines(fine: Cover, coarse: Cover, sample: WitnessSample | None = None) -> bool:
    """Every element of ``fine`` lies inside some element of ``coarse``.

    Pairs of interval unions, boxes or cylinders are compared exactly;
    anything else is compared on the witness sample.
    """
    _same_space(fine, coarse)
    pending = []
    for i, f in enumerate(fine.elements):
        if getattr(f, "empty", False):
            continue
        symbolic = [c for c in coarse.elements if _symbolic_pair(f, c)]
        if len(symbolic) == len(coarse.elements):
            if not any(f.subset(c) for c in symbolic):
                return False
        else:
            pending.append(i)
    if not pending:
        return True
    sample = _sample_for(fine, coarse, sample=sample)
    if sample is None:
        raise UndecidableRefinementError()
    inner = np.stack([fine.elements[i].contains_batch(sample.points) for i in pending])
    outer = coarse.membership(sample.points)
    # escapes[f, c] = number of sample points in f but not in c
    escapes = inner.astype(np.int64) @ (~outer).T.astype(np.int64)
    return bool((escapes == 0).any(axis=1).all())


def join(a: Cover, b: Cover, sample: WitnessSample | None = None) -> Cover:
    """All pairwise intersections that are nonempty (exactly or on the sample)."""
    _same_space(a, b)
    sample = _sample_for(a, b, sample=sample)
    seen: set[CoverElement] = set()
    elements: list[CoverElement] = []
    for x in a.elements:
        for y in b.elements:
            if _symbolic_pair(x, y):
                meet = x.intersect(y)
                if meet is None or meet.empty:
                    continue
            else:
                meet = Meet((x, y))
                if sample is not None and not meet.contains_batch(sample.points).any():
                    continue
            if meet not in seen:
                seen.add(meet)
                elements.append(meet)
    kind = "partition" if a.is_partition and b.is_partition else "cover"
    return Cover(a.space, tuple(elements), kind, sample)


def restrict(a: Cover, sample: WitnessSample) -> Cover:
    """Y ∩ 𝒜 as the elements that meet Y, with Y as witness."""
    member = a.membership(sample.points)
    keep = np.flatnonzero(member.any(axis=1))
    return Cover(
        a.space,
        tuple(a.elements[i] for i in keep),
        a.kind,
        sample,
        tuple(bitsets_from_masks(member[keep])),
    )


# Itinerary growth


@dataclass
class ItineraryLevel:
    """Nonempty itineraries of length ``n`` as sorted incidence pairs."""

    n: int
    paths: np.ndarray
    it: np.ndarray
    pt: np.ndarray
    size: int

    @property
    def count(self) -> int:
        return len(self.paths)

    def packed(self) -> np.ndarray:
        """(itineraries, ceil(size / 8)) uint8 rows, bit p set when point p follows it."""
        packed = np.zeros((self.count, (self.size + 7) // 8), dtype=np.uint8)
        bits = (np.uint8(1) << (self.pt & 7).astype(np.uint8)).astype(np.uint8)
        np.bitwise_or.at(packed, (self.it, self.pt >> 3), bits)
        return packed

    def bitsets(self) -> list[int]:
        return [int.from_bytes(row.tobytes(), "little") for row in self.packed()]


def _point_set_groups(level: ItineraryLevel) -> np.ndarray:
    """Index of the first itinerary of every distinct point set."""
    _, first = np.unique(level.packed(), axis=0, return_index=True)
    return np.sort(first)


def _keep_itineraries(level: ItineraryLevel, keep: np.ndarray) -> ItineraryLevel:
    renumber = np.full(level.count, -1, dtype=np.int64)
    renumber[keep] = np.arange(len(keep))
    mask = renumber[level.it] >= 0
    return ItineraryLevel(
        level.n, level.paths[keep], renumber[level.it[mask]], level.pt[mask], level.size
    )


def itinerary_levels(
    membership: Callable[[int], np.ndarray],
    n_max: int,
    size: int,
    *,
    dedupe: bool = False,
) -> Iterator[ItineraryLevel]:
    """Yield the nonempty itineraries of lengths 1..n_max.

    Args:
        membership: ``membership(j)`` is the (elements, points) bool matrix of
            the base elements containing T^j of each sample point.
        n_max: longest itinerary.
        size: number of sample points.
        dedupe: keep one itinerary per distinct point set.
    """
    member = membership(0)
    elements = member.shape[0]
    it, pt = np.nonzero(member)
    paths = np.arange(elements, dtype=np.int64)[:, None]
    level = ItineraryLevel(1, paths, it.astype(np.int64), pt.astype(np.int64), size)
    used = np.unique(level.it)
    level = _keep_itineraries(level, used)
    if dedupe:
        level = _keep_itineraries(level, _point_set_groups(level))
    yield level
    for k in range(1, n_max):
        point_of, element_of = np.nonzero(membership(k).T)
        per_point = np.bincount(point_of, minlength=size)
        offsets = np.r_[0, np.cumsum(per_point)[:-1]]
        repeat = per_point[level.pt]
        parent = np.repeat(level.it, repeat)
        point = np.repeat(level.pt, repeat)
        within = np.arange(len(parent)) - np.repeat(np.cumsum(repeat) - repeat, repeat)
        element = element_of[offsets[point] + within]
        keys, it = np.unique(parent * elements + element, return_inverse=True)
        order = np.lexsort((point, it))
        paths = np.column_stack([level.paths[keys // elements], keys % elements])
        level = ItineraryLevel(k + 1, paths, it[order], point[order], size)
        if dedupe:
            level = _keep_itineraries(level, _point_set_groups(level))
        logger.debug("level %d: %d itineraries, %d pairs", k + 1, level.count, len(level.pt))
        yield level


def _orbit_membership(
    a: Cover, table: OrbitTable
) -> Callable[[int], np.ndarray]:
    def membership(j: int) -> np.ndarray:
        states = table.at(j)
        return a.check(states)

    return membership


def _cylinder_depth(a: Cover, sys: DynamicalSystem) -> int | None:
    """Common depth when ``a`` consists of cylinders over the SFT ``sys``."""
    if not isinstance(sys, ShiftSFT) or not a.elements:
        return None
    if not all(isinstance(e, Cylinder) for e in a.elements):
        return None
    depths = {e.depth for e in a.elements}
    if len(depths) != 1:
        return None
    return depths.pop()


def is_symbolic_cover(a: Cover, sys: DynamicalSystem) -> bool:
    """Whether N(𝒜^n) of ``a`` is counted exactly from admissible words."""
    return _cylinder_depth(a, sys) is not None


def _cylinder_index(a: Cover, sft: ShiftSFT, depth: int) -> dict[tuple[int, ...], int]:
    """Map admissible depth-``depth`` words to the first cylinder equal to them."""
    index: dict[tuple[int, ...], int] = {}
    for i, e in enumerate(a.elements):
        index.setdefault(e.symbols, i)
    for word in enumerate_words(sft, depth):
        key = tuple(int(s) for s in word)
        if key not in index:
            raise NotACoverError(sft.space.point(word))
    return index


def _symbolic_iterate(a: Cover, sft: ShiftSFT, depth: int, n: int) -> Cover:
    index = _cylinder_index(a, sft, depth)
    elements = []
    for word in enumerate_words(sft, n + depth - 1):
        symbols = tuple(int(s) for s in word)
        path = tuple(index[symbols[j : j + depth]] for j in range(n))
        elements.append(Itinerary(a.elements, sft, path))
    return Cover(a.space, tuple(elements), a.kind)


def iterate_cover(
    a: Cover,
    sys: DynamicalSystem,
    n: int,
    sample: WitnessSample | None = None,
) -> Cover:
    """𝒜^n = 𝒜 ∨ T^-1 𝒜 ∨ ... ∨ T^-(n-1) 𝒜 without empty itineraries.

    Equal-depth cylinder covers of an SFT are iterated exactly (an itinerary
    is nonempty iff its combined word is admissible); every other cover is
    pruned on the witness sample, whose orbit points must stay covered.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return a
    depth = _cylinder_depth(a, sys)
    if depth is not None:
        return _symbolic_iterate(a, sys, depth, n)
    sample = _sample_for(a, sample=sample)
    if sample is None:
        raise UndecidableRefinementError()
    table = OrbitTable.build(sys, sample.points, n)
    *_, level = itinerary_levels(_orbit_membership(a, table), n, len(sample))
    elements = tuple(
        Itinerary(a.elements, sys, tuple(int(i) for i in path)) for path in level.paths
    )
    return Cover(a.space, elements, a.kind, sample, tuple(level.bitsets()))


def _solve(sets: list[int], size: int, partition: bool, exact_limit: int) -> SetCoverResult:
    universe = (1 << size) - 1
    if partition:
        chosen = tuple(i for i, bits in enumerate(sets) if bits)
        return SetCoverResult(len(chosen), chosen, True)
    result = solve_set_cover(sets, universe, exact_limit=exact_limit)
    if not result.exact:
        logger.info("set cover over %d sets fell back to greedy", len(sets))
    return result


def min_subcover(
    a: Cover,
    sample: WitnessSample | None = None,
    *,
    exact_limit: int = EXACT_COVER_LIMIT,
) -> SetCoverResult:
    """Smallest subfamily of ``a`` containing every sample point.

    For a partition this is the number of cells meeting the sample.
    """
    sample = _sample_for(a, sample=sample)
    if sample is None:
        raise UndecidableRefinementError()
    if a.supports is not None and a.witness is sample:
        sets = list(a.supports)
    else:
        sets = bitsets_from_masks(a.check(sample.points))
    return _solve(sets, len(sample), a.is_partition, exact_limit)


def min_subcover_cardinality(a: Cover, sample: WitnessSample | None = None) -> int:
    return min_subcover(a, sample).size


def cover_entropy(a: Cover, sample: WitnessSample | None = None) -> float:
    return math.log(min_subcover_cardinality(a, sample))


def subcover_counts(
    a: Cover,
    sys: DynamicalSystem,
    n_max: int,
    sample: WitnessSample | None = None,
    *,
    exact_limit: int = EXACT_COVER_LIMIT,
) -> list[SetCoverResult]:
    """N(𝒜^n) for n = 1..n_max."""
    depth = _cylinder_depth(a, sys)
    if depth is not None:
        _cylinder_index(a, sys, depth)
        return [
            SetCoverResult(admissible_words(sys, n + depth - 1), (), True)
            for n in range(1, n_max + 1)
        ]
    sample = _sample_for(a, sample=sample)
    if sample is None:
        raise UndecidableRefinementError()
    table = OrbitTable.build(sys, sample.points, n_max)
    results = []
    for level in itinerary_levels(
        _orbit_membership(a, table), n_max, len(sample), dedupe=True
    ):
        if a.is_partition:
            results.append(SetCoverResult(level.count, tuple(range(level.count)), True))
        else:
            results.append(
                _solve(level.bitsets(), len(sample), False, exact_limit)
            )
    return results


# Admissibility


class Admissibility(NamedTuple):
    admissible: bool
    strong: bool


def is_admissible(a: Cover) -> Admissibility:
    """Some element (``strong``: every element) has compact complement."""
    flags = [e.complement_compact(a.space) for e in a.elements]
    return Admissibility(any(flags), bool(flags) and all(flags))


# Builders


def _mesh_axis(lo: float, hi: float, delta: float) -> list[IntervalUnion]:
    count = math.ceil((hi - lo) / delta)
    half = 0.75 * delta
    return [
        IntervalUnion.interval(lo + i * delta - half, lo + i * delta + half)
        for i in range(count + 1)
    ]


def _arcs(count: int) -> list[IntervalUnion]:
    half = 0.75 / count
    return [IntervalUnion.arc(k / count - half, k / count + half) for k in range(count)]


def _products(axes: Sequence[Sequence[IntervalUnion]]) -> list[CoverElement]:
    if len(axes) == 1:
        return list(axes[0])
    grids = np.meshgrid(*[np.arange(len(a)) for a in axes], indexing="ij")
    combos = np.stack([g.reshape(-1) for g in grids], axis=1)
    return [Box(tuple(axes[d][i] for d, i in enumerate(row))) for row in combos]


def build_admissible_cover(
    space: Space, compact: CompactBox | None = None, delta: float = 0.25
) -> Cover:
    """Open δ-mesh cover of K plus the patch X minus K shrunk by δ/2.

    On the circle and the torus the mesh covers the whole space and no patch
    is needed.
    """
    if delta <= 0:
        raise ValueError("mesh δ must be positive")
    if space.symbolic:
        raise WrongSpaceError("a continuous space", space.label)
    if space.periodic:
        if compact is not None:
            compact.require_nondegenerate()
        arcs = _arcs(math.ceil(1.0 / delta))
        return Cover(space, tuple(_products([arcs] * space.dim)))
    compact = compact or CompactBox.cube(1.0, space.dim)
    compact.require_nondegenerate()
    if compact.dim != space.dim:
        raise WrongSpaceError(space.label, f"compact of dimension {compact.dim}")
    axes = [_mesh_axis(lo, hi, delta) for lo, hi in zip(compact.lower, compact.upper)]
    inner = compact.shrink(delta / 2.0)
    # a box thinner than δ shrinks to its center
    mid = [(a + b) / 2.0 for a, b in zip(compact.lower, compact.upper)]
    lower = tuple(min(lo, m) for lo, m in zip(inner.lower, mid))
    upper = tuple(max(hi, m) for hi, m in zip(inner.upper, mid))
    patch = ComplementOfCompact(CompactBox(lower=lower, upper=upper))
    return Cover(space, (*_products(axes), patch))


def dyadic_partition(
    space: Space, depth: int, compact: CompactBox | None = None
) -> Cover:
    """Dyadic arcs of the circle or torus; dyadic cells of K plus the outside cell on R^d."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if space.symbolic:
        raise WrongSpaceError("a continuous space", space.label)
    cells = 2**depth
    if space.periodic:
        axis = [
            IntervalUnion.arc(k / cells, (k + 1) / cells, closed_left=True)
            for k in range(cells)
        ]
        return Cover(space, tuple(_products([axis] * space.dim)), "partition")
    compact = compact or CompactBox.cube(1.0, space.dim)
    compact.require_nondegenerate()
    axes = []
    for lo, hi in zip(compact.lower, compact.upper):
        edges = np.linspace(lo, hi, cells + 1)
        axes.append(
            [
                IntervalUnion.interval(float(a), float(b), closed_left=True)
                for a, b in zip(edges[:-1], edges[1:])
            ]
        )
    return Cover(space, (*_products(axes), Outside(compact)), "partition")


def generating_partition(sft: ShiftSFT, depth: int = 1) -> Cover:
    """Cylinders of the admissible words of length ``depth``."""
    words = enumerate_words(sft, depth)
    elements = tuple(
        Cylinder(tuple(int(s) for s in w), sft.alphabet) for w in words
    )
    return Cover(sft.space, elements, "partition")


# Ball covers


def ball_supports(
    table: OrbitTable,
    metric: Metric,
    n: int,
    eps: float,
) -> list[np.ndarray]:
    """Sample indices of every open d_n-ball centred at a sample point."""
    bound = metric.bind(table.space)
    index = NeighborIndex.build(bound, table, n)
    return [dn_ball(bound, table, i, n, eps, index) for i in range(table.size)]


def ball_cover(
    sample: WitnessSample,
    metric: Metric,
    sys: DynamicalSystem,
    n: int,
    eps: float,
    table: OrbitTable | None = None,
) -> Cover:
    """B_{d_n}(ε) restricted to the sample, one ball per sample point."""
    table = table or OrbitTable.build(sys, sample.points, n)
    bound = metric.bind(sample.space)
    rows = ball_supports(table, metric, n, eps)
    masks = np.zeros((len(rows), len(sample)), dtype=bool)
    for i, row in enumerate(rows):
        masks[i, row] = True
    elements = tuple(
        DynamicalBall(bound, sys, n, tuple(sample.points[i].tolist()), eps)
        for i in range(len(sample))
    )
    return Cover(sample.space, elements, "cover", sample, tuple(bitsets_from_masks(masks)))


def lebesgue_number(
    a: Cover,
    sample: WitnessSample,
    metric: Metric,
    eps_grid: Sequence[float],
) -> float:
    """Largest ε of the grid with every ε-ball of the sample inside one element.

    Quadratic in the sample size; 0.0 when no ε of the grid works.
    """
    bound = metric.bind(sample.space)
    member = a.check(sample.points)
    points = sample.points
    for eps in sorted(eps_grid, reverse=True):
        for i in range(len(sample)):
            ball = bound.pairwise(points, points[i : i + 1]) < eps
            if not ((~member[:, ball]).sum(axis=1) == 0).any():
                break
        else:
            return float(eps)
    return 0.0


@dataclass(frozen=True)
class BallChainReport:
    """[B_d(ε)]^n ≺ B_{d_n}(ε) ≺ [B_d(ε/2)]^n on a sample, with the three N_Y."""

    coarse_refined: bool
    fine_refines: bool
    counts: tuple[int, int, int]

    @property
    def ok(self) -> bool:
        low, mid, high = self.counts
        return self.coarse_refined and self.fine_refines and low <= mid <= high


def _orbit_balls(
    bound: Metric, table: OrbitTable, n: int, radius: float
) -> Callable[[int], np.ndarray]:
    """Membership in the balls centred at every T^t x, t < n, of the sample."""

    def membership(j: int) -> np.ndarray:
        states = table.at(j)
        return np.concatenate(
            [bound.pairwise(states[None], table.at(t)[:, None]) < radius for t in range(n)]
        )

    return membership


def _lowest_member(bits: int) -> int:
    return (bits & -bits).bit_length() - 1


def ball_refinement_chain_check(
    sample: WitnessSample,
    metric: Metric,
    sys: DynamicalSystem,
    n: int,
    eps: float,
) -> BallChainReport:
    """Check the ball-cover chain on a small sample.

    Both itinerary covers use balls centred at all orbit points of the
    sample, so every d_n-ball is one of the coarse itineraries. Cost grows
    with n^2 |sample|^2; meant for samples of a few hundred points.
    """
    table = OrbitTable.build(sys, sample.points, n)
    bound = metric.bind(sample.space)
    size = len(sample)
    universe = (1 << size) - 1

    balls = ball_supports(table, metric, n, eps)
    masks = np.zeros((size, size), dtype=bool)
    for i, row in enumerate(balls):
        masks[i, row] = True
    ball_sets = bitsets_from_masks(masks)

    *_, coarse = itinerary_levels(_orbit_balls(bound, table, n, eps), n, size, dedupe=True)
    coarse_sets = coarse.bitsets()
    container: dict[int, int] = {}
    for i, bits in enumerate(ball_sets):
        for j, outer in enumerate(coarse_sets):
            if not bits & ~outer:
                container[i] = j
                break
    coarse_refined = len(container) == size

    *_, fine = itinerary_levels(
        _orbit_balls(bound, table, n, eps / 2.0), n, size, dedupe=True
    )
    fine_sets = fine.bitsets()
    fine_refines = all(
        not bits & ~ball_sets[_lowest_member(bits)] for bits in fine_sets
    )

    # each cover found on one side is a feasible cover for its neighbour
    high = solve_set_cover(fine_sets, universe)
    mid = solve_set_cover(
        ball_sets,
        universe,
        known_cover=sorted({_lowest_member(fine_sets[i]) for i in high.chosen}),
    )
    low = solve_set_cover(
        coarse_sets,
        universe,
        known_cover=sorted({container[i] for i in mid.chosen if i in container}),
    )
    return BallChainReport(coarse_refined, fine_refines, (low.size, mid.size, high.size))
