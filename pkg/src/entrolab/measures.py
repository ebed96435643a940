"""Finitely supported measures and the entropy of partitions under them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

from .const import (
    ATOM_MERGE_TOL,
    INVARIANCE_THRESHOLD,
    STRICT_MODE,
)
from .covers import Cover
from .errors import InvariantViolation, PartitionTooCoarseError
from .growth import GrowthSeries, SeriesEntry
from .metrics import Metric
from .samples import WitnessSample, grid_sample
from .systems import (
    DynamicalSystem,
    Identity,
    Iterate,
    OrbitTable,
    Point,
    ShiftSFT,
    Space,
    enumerate_words,
    perron_data,
    space_of,
)

logger = logging.getLogger(__name__)


def _merge_atoms(
    space: Space, points: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    if len(points) == 0:
        return points, weights
    if space.symbolic:
        unique, inverse = np.unique(points, axis=0, return_inverse=True)
        merged = np.bincount(inverse.reshape(-1), weights=weights, minlength=len(unique))
    else:
        order = np.lexsort(points.T[::-1])
        ordered = points[order]
        jumps = np.abs(np.diff(ordered, axis=0)).max(axis=1) > ATOM_MERGE_TOL
        group = np.r_[0, np.cumsum(jumps)]
        first = np.r_[0, np.flatnonzero(jumps) + 1]
        unique = ordered[first]
        merged = np.bincount(group, weights=weights[order], minlength=len(unique))
    keep = merged > 0
    return unique[keep], merged[keep]


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Positive weights on finitely many atoms, total mass at most 1.

    Atoms closer than ``ATOM_MERGE_TOL`` (equal words, for word spaces) are
    merged on construction.
    """

    space: Space
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if (weights < 0).any():
            raise ValueError("atom weights must be nonnegative")
        points, weights = _merge_atoms(self.space, np.asarray(self.points), weights)
        if weights.sum() > 1.0 + 1e-12:
            raise ValueError(f"total mass {weights.sum()} exceeds 1")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, space: Space, points: np.ndarray, total: float = 1.0) -> FiniteMeasure:
        return cls(space, points, np.full(len(points), total / len(points)))

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[Point, float]]) -> FiniteMeasure:
        if not atoms:
            raise ValueError("need at least one atom")
        space = space_of(atoms[0][0])
        points = space.batch([x for x, _ in atoms])
        return cls(space, points, np.array([w for _, w in atoms], dtype=float))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def is_probability(self) -> bool:
        return abs(self.total - 1.0) <= 1e-9

    def atoms(self) -> list[tuple[Point, float]]:
        return [
            (self.space.point(p), float(w)) for p, w in zip(self.points, self.weights)
        ]

    def scaled(self, alpha: float) -> FiniteMeasure:
        return FiniteMeasure(self.space, self.points, self.weights * alpha)

    def combine(self, other: FiniteMeasure, alpha: float, beta: float) -> FiniteMeasure:
        """alpha * self + beta * other."""
        if other.space != self.space:
            raise ValueError("cannot combine measures on different spaces")
        return FiniteMeasure(
            self.space,
            np.concatenate([self.points, other.points]),
            np.concatenate([self.weights * alpha, other.weights * beta]),
        )

    def restrict(self, mask: np.ndarray) -> FiniteMeasure:
        return FiniteMeasure(self.space, self.points[mask], self.weights[mask])

    def describe(self) -> dict:
        return {
            "space": self.space.label,
            "total": self.total,
            "atoms": [
                {"point": p.tolist(), "weight": float(w)}
                for p, w in zip(self.points, self.weights)
            ],
        }


def dirac(x: Point) -> FiniteMeasure:
    return FiniteMeasure.from_atoms([(x, 1.0)])


def periodic_orbit_measure(sys: DynamicalSystem, x: Point, period: int) -> FiniteMeasure:
    """Uniform measure on x, Tx, ..., T^(period-1) x; x must satisfy T^period x = x."""
    if period < 1:
        raise ValueError("period must be at least 1")
    space = sys.space
    table = OrbitTable.build(sys, space.batch([x]), period + 1)
    back = table.at(period)
    states = [table.at(j) for j in range(period)]
    if space.symbolic:
        states = [s[:, : back.shape[1]] for s in states]
        closed = np.array_equal(states[0], back)
    else:
        gap = np.abs(back - states[0])
        if space.periodic:
            gap = np.minimum(gap, 1.0 - gap)
        closed = bool(gap.max() <= ATOM_MERGE_TOL)
    if not closed:
        raise ValueError(f"{x!r} does not return after {period} steps")
    return FiniteMeasure.uniform(space, np.concatenate(states))


def uniform_grid_measure(space: Space, size: int | None = None) -> FiniteMeasure:
    return FiniteMeasure.uniform(space, grid_sample(space, size).points)


# Partition entropy


def cell_labels(p: Cover, batch: np.ndarray) -> np.ndarray:
    """Index of the unique cell of ``p`` containing each row of ``batch``."""
    partition = Cover(p.space, p.elements, "partition")
    return partition.check(batch).argmax(axis=0)


def _masses(labels: np.ndarray, weights: np.ndarray, cells: int | None = None) -> np.ndarray:
    return np.bincount(labels, weights=weights, minlength=cells or 0)


def _entropy(masses: np.ndarray) -> float:
    """Σ m log(1/m) with 0 log(1/0) = 0."""
    return float(entr(masses).sum())


@dataclass(frozen=True, eq=False)
class MeasuredPartition:
    partition: Cover
    cell_masses: np.ndarray

    @property
    def entropy(self) -> float:
        return _entropy(self.cell_masses)


def measure_partition(mu: FiniteMeasure, p: Cover) -> MeasuredPartition:
    masses = _masses(cell_labels(p, mu.points), mu.weights, len(p))
    return MeasuredPartition(p, masses)


def partition_entropy(mu: FiniteMeasure, p: Cover) -> float:
    return measure_partition(mu, p).entropy


def _itinerary_labels(
    points: np.ndarray, sys: DynamicalSystem, p: Cover, n: int
) -> np.ndarray:
    """Label of the cell of p^n containing each point (cells numbered densely)."""
    table = OrbitTable.build(sys, points, n)
    rows = np.stack([cell_labels(p, table.at(j)) for j in range(n)], axis=1)
    _, inverse = np.unique(rows, axis=0, return_inverse=True)
    return inverse.reshape(-1)


def iterated_partition_entropy(
    mu: FiniteMeasure, sys: DynamicalSystem, p: Cover, n: int
) -> float:
    """H_μ(p ∨ T^-1 p ∨ ... ∨ T^-(n-1) p)."""
    return _entropy(_masses(_itinerary_labels(mu.points, sys, p, n), mu.weights))


def conditional_entropy(mu: FiniteMeasure, d: Cover, c: Cover) -> float:
    """H_μ(d | c) for a probability measure; null cells of c contribute 0."""
    if not mu.is_probability:
        raise ValueError(f"conditional entropy needs a probability measure, total={mu.total}")
    c_labels = cell_labels(c, mu.points)
    d_labels = cell_labels(d, mu.points)
    joint = np.zeros((len(c), len(d)))
    np.add.at(joint, (c_labels, d_labels), mu.weights)
    outer = joint.sum(axis=1)
    total = 0.0
    for mass, row in zip(outer, joint):
        if mass > 0:
            total += mass * _entropy(row / mass)
    return total


def pushforward_mass(
    mu: FiniteMeasure, sys: DynamicalSystem, p: Cover, j: int
) -> np.ndarray:
    """Cell masses of μ∘T^-j."""
    table = OrbitTable.build(sys, mu.points, j + 1)
    return _masses(cell_labels(p, table.at(j)), mu.weights, len(p))


def invariance_defect(mu: FiniteMeasure, sys: DynamicalSystem, p: Cover) -> float:
    """max over cells |μ(C) - μ(T^-1 C)|."""
    table = OrbitTable.build(sys, mu.points, 2)
    before = _masses(cell_labels(p, table.at(0)), mu.weights, len(p))
    after = _masses(cell_labels(p, table.at(1)), mu.weights, len(p))
    return float(np.abs(before - after).max())


def ks_entropy_over_partition(
    mu: FiniteMeasure,
    sys: DynamicalSystem,
    p: Cover,
    n_max: int,
    *,
    threshold: float = INVARIANCE_THRESHOLD,
    window: tuple[int, int] | None = None,
    label: str = "ks",
) -> GrowthSeries:
    """H_μ(p^n) for n = 1..n_max; the fitted slope estimates h_μ(p, T).

    A measure whose invariance defect on ``p`` exceeds ``threshold`` gets a
    warning and is excluded from headlines.
    """
    defect = invariance_defect(mu, sys, p)
    warnings = []
    if defect > threshold:
        message = f"invariance defect {defect:.3g} above {threshold:.3g}"
        if STRICT_MODE:
            raise InvariantViolation(message)
        logger.warning("%s: %s", label, message)
        warnings.append(message)
    table = OrbitTable.build(sys, mu.points, n_max)
    columns = []
    entries = []
    for n in range(1, n_max + 1):
        columns.append(cell_labels(p, table.at(n - 1)))
        cells, inverse = np.unique(np.stack(columns, axis=1), axis=0, return_inverse=True)
        entries.append(
            SeriesEntry(
                n=n,
                log_count=_entropy(_masses(inverse.reshape(-1), mu.weights)),
                count=len(cells),
            )
        )
    # cells of p^n stop splitting once they hold single atoms
    return GrowthSeries.from_entries(
        "ks",
        label,
        entries,
        sample_size=len(mu),
        window=window,
        params={"defect": defect, "atoms": len(mu)},
        warnings=warnings,
        excluded=bool(warnings),
    )


def ks_iterate_identity(
    mu: FiniteMeasure, sys: DynamicalSystem, p: Cover, k: int, n: int
) -> tuple[float, float]:
    """Both sides of (1/n) H_μ((p_T^k)^n under T^k) = (k/(kn)) H_μ(p^(kn) under T).

    The left side labels each point of the T^k orbit by its k-step
    itinerary under T; the right side iterates T directly.
    """
    iterated = Iterate(base=sys, k=k)
    table = OrbitTable.build(iterated, mu.points, n)
    blocks = [_itinerary_labels(table.at(j), sys, p, k) for j in range(n)]
    _, inverse = np.unique(np.stack(blocks, axis=1), axis=0, return_inverse=True)
    left = _entropy(_masses(inverse.reshape(-1), mu.weights)) / n
    right = k / (k * n) * iterated_partition_entropy(mu, sys, p, k * n)
    return left, right


# The empirical-measure construction


def empirical_measures(
    sample: WitnessSample | np.ndarray, sys: DynamicalSystem, n: int
) -> tuple[FiniteMeasure, FiniteMeasure]:
    """σ_n uniform on E and μ_n = (1/n) Σ_{j<n} σ_n∘T^-j.

    On word spaces the orbit points are truncated to a common length.
    """
    points = sample.points if isinstance(sample, WitnessSample) else sample
    space = sys.space
    sigma = FiniteMeasure.uniform(space, points)
    table = OrbitTable.build(sys, points, n)
    states = [table.at(j) for j in range(n)]
    if space.symbolic:
        width = states[-1].shape[1]
        states = [s[:, :width] for s in states]
    stacked = np.concatenate(states)
    mu = FiniteMeasure(space, stacked, np.full(len(stacked), 1.0 / len(stacked)))
    return sigma, mu


@dataclass(frozen=True)
class ChainReport:
    n: int
    q: int
    m: int
    separated: int
    cells_q: int
    h_sigma_n: float
    h_mu_q: float
    averaged_h_q: float
    lhs: float
    rhs: float
    max_cell_diameter: float

    @property
    def equality_holds(self) -> bool:
        return abs(self.h_sigma_n - math.log(self.separated)) <= 1e-9

    @property
    def inequality_holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9

    @property
    def convexity_holds(self) -> bool:
        return self.averaged_h_q <= self.h_mu_q + 1e-9

    @property
    def ok(self) -> bool:
        return self.equality_holds and self.inequality_holds and self.convexity_holds

    def describe(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "separated": self.separated,
            "cells_q": self.cells_q,
            "h_sigma_n": self.h_sigma_n,
            "h_mu_q": self.h_mu_q,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ok": self.ok,
        }


def _max_cell_diameter(metric: Metric, states: np.ndarray, labels: np.ndarray) -> float:
    widest = 0.0
    for cell in np.unique(labels):
        members = states[labels == cell]
        if len(members) > 1:
            gaps = metric.pairwise(members[:, None], members[None, :])
            widest = max(widest, float(gaps.max()))
    return widest


def misiurewicz_chain_check(
    separated: WitnessSample | np.ndarray,
    sys: DynamicalSystem,
    p: Cover,
    n: int,
    q: int,
    *,
    metric: Metric,
    eps: float,
) -> ChainReport:
    """Evaluate the finite inequalities that turn separated sets into entropy.

    With m = ceil(n / q) and |p^q| the number of q-cells visited by T^t x,
    x in E, t < mq, checks H_{σ_n}(p^n) = log|E| and
    q log|E| <= 2q log|p^q| + n H_{μ_n}(p^q), together with the concavity
    step between them.
    """
    if not 1 < q < n:
        raise ValueError(f"need 1 < q < n, got q={q}, n={n}")
    points = separated.points if isinstance(separated, WitnessSample) else separated
    bound = metric.bind(sys.space)
    m = math.ceil(n / q)
    steps = max(n, m * q + q - 1)
    table = OrbitTable.build(sys, points, steps)
    labels = np.stack([cell_labels(p, table.at(t)) for t in range(steps)])

    if sys.space.symbolic:
        width = table.at(steps - 1).shape[1]
        states = np.concatenate([table.at(t)[:, :width] for t in range(steps)])
    else:
        states = table.states.reshape(-1, table.states.shape[-1])
    diameter = _max_cell_diameter(bound, states, labels.reshape(-1))
    if diameter >= eps:
        raise PartitionTooCoarseError(diameter, eps)

    size = len(points)
    uniform = np.full(size, 1.0 / size)

    def q_cells(t: int) -> np.ndarray:
        return labels[t : t + q].T

    def entropy_of(rows: np.ndarray, weights: np.ndarray) -> float:
        _, inverse = np.unique(rows, axis=0, return_inverse=True)
        return _entropy(_masses(inverse.reshape(-1), weights))

    h_sigma_n = entropy_of(labels[:n].T, uniform)
    visited = np.concatenate([q_cells(t) for t in range(m * q)])
    cells_q = len(np.unique(visited, axis=0))
    averaged = sum(entropy_of(q_cells(t), uniform) for t in range(n)) / n
    h_mu_q = entropy_of(
        np.concatenate([q_cells(t) for t in range(n)]), np.full(n * size, 1.0 / (n * size))
    )
    report = ChainReport(
        n=n,
        q=q,
        m=m,
        separated=size,
        cells_q=cells_q,
        h_sigma_n=h_sigma_n,
        h_mu_q=h_mu_q,
        averaged_h_q=averaged,
        lhs=q * math.log(size),
        rhs=2 * q * math.log(cells_q) + n * h_mu_q,
        max_cell_diameter=diameter,
    )
    logger.debug("chain n=%d q=%d: %s", n, q, report.describe())
    return report


# Invariant measures


def parry_measure(sft: ShiftSFT, length: int) -> FiniteMeasure:
    """Weights of the measure of maximal entropy on the words of one length.

    μ[w] = u_{w_0} v_{w_last} / (λ^(length-1) u·v) with u, v the left and
    right Perron vectors.
    """
    root, left, right = perron_data(sft)
    words = enumerate_words(sft, length)
    weights = left[words[:, 0]] * right[words[:, -1]]
    weights = weights / (root ** (length - 1) * float(left @ right))
    return FiniteMeasure(sft.space, words, weights / weights.sum())


def markov_entropy(sft: ShiftSFT) -> float:
    """-Σ π_i P_ij log P_ij of the Parry Markov chain."""
    root, left, right = perron_data(sft)
    matrix = sft.matrix.astype(float)
    transition = matrix * right[None, :] / (root * right[:, None])
    stationary = left * right / float(left @ right)
    return float((stationary[:, None] * entr(transition)).sum())


@dataclass(frozen=True)
class CandidateMeasure:
    """A measure offered to the KS estimator and the defect it must stay under."""

    name: str
    measure: FiniteMeasure
    threshold: float = INVARIANCE_THRESHOLD


def _candidates(
    sys: DynamicalSystem, grid_size: int | None, word_length: int
) -> list[CandidateMeasure]:
    if isinstance(sys, Iterate):
        return _candidates(sys.base, grid_size, word_length)
    if isinstance(sys, ShiftSFT):
        return [CandidateMeasure("parry", parry_measure(sys, word_length))]
    space = sys.space
    found = []
    if space.periodic:
        found.append(CandidateMeasure("uniform", uniform_grid_measure(space, grid_size)))
    points = sys.fixed_points()
    if isinstance(sys, Identity) and not space.periodic:
        if space.symbolic:
            points = [space.point(np.zeros(word_length, dtype=int))]
        else:
            points = [space.point(np.zeros(space.dim))]
    found.extend(CandidateMeasure(f"dirac{i}", dirac(x)) for i, x in enumerate(points))
    return found


def invariant_measures(
    sys: DynamicalSystem,
    partitions: Sequence[Cover],
    *,
    grid_size: int | None = None,
    word_length: int = 16,
    steps: int = 12,
    threshold: float = INVARIANCE_THRESHOLD,
) -> list[CandidateMeasure]:
    """Measures whose invariance defect on every partition is below ``threshold``.

    The uniform grid of a compact space, Diracs at the known fixed points and
    the Parry measure of a subshift are tried in that order. When none of them
    passes, the orbit average μ_n of the grid over ``steps`` steps is returned
    instead; its defect is at most 1/steps, which becomes its threshold.
    """
    if not partitions:
        raise ValueError("need at least one partition")
    accepted = []
    for candidate in _candidates(sys, grid_size, word_length):
        defect = max(invariance_defect(candidate.measure, sys, p) for p in partitions)
        if defect <= threshold:
            accepted.append(candidate)
        else:
            logger.debug("%s rejected: invariance defect %.3g", candidate.name, defect)
    if accepted or sys.space.symbolic:
        return accepted
    _, mu = empirical_measures(grid_sample(sys.space, grid_size), sys, steps)
    logger.info("No invariant grid or Dirac measure, using the orbit average over %d steps", steps)
    return [CandidateMeasure("empirical", mu, 1.0 / steps + threshold)]
