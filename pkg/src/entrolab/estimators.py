"""Entropy estimators over separated sets, spanning balls and covers.

Every estimate is a maximum of fitted growth rates over a finite grid
(ε, compacts, covers or partitions), so all headlines are lower bounds of
the supremum-defined entropies; the symbolic cylinder counts are exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .const import CHAIN_TOLERANCE, DEFAULT_EPS_GRID, INVARIANCE_THRESHOLD
from .covers import (
    Cover,
    ball_supports,
    is_admissible,
    is_symbolic_cover,
    subcover_counts,
)
from .errors import AuditFailure, InvariantViolation, NonAdmissibleCoverError
from .growth import EntropyReport, GrowthSeries, fit_rate
from .measures import invariant_measures, ks_entropy_over_partition
from .metrics import Compactified, EuclideanMetric, Metric, NeighborIndex, dn_ball
from .samples import CompactBox, WitnessSample, grid_sample, words_sample
from .setcover import bitset_from_indices, solve_set_cover
from .systems import DynamicalSystem, Iterate, OrbitTable, Point, underlying_shift

logger = logging.getLogger(__name__)

__all__ = [
    "AuditReport",
    "SandwichReport",
    "ScalingReport",
    "bowen_entropy_estimate",
    "d_entropy_estimate",
    "fit_rate",
    "greedy_maximal_separated",
    "ks_entropy_estimate",
    "sandwich_check",
    "separated_count_series",
    "separated_indices",
    "spanning_count_series",
    "submultiplicative_violations",
    "topological_entropy_estimate",
    "variational_audit",
]


# Separated sets


def _greedy(
    table: OrbitTable,
    bound: Metric,
    n: int,
    eps: float,
    index: NeighborIndex | None,
) -> np.ndarray:
    """Scan the sample in order, keeping every point not within ε of a kept one."""
    blocked = np.zeros(table.size, dtype=bool)
    chosen = []
    for i in range(table.size):
        if blocked[i]:
            continue
        chosen.append(i)
        blocked[dn_ball(bound, table, i, n, eps, index)] = True
    if not blocked.all():
        raise InvariantViolation("greedy separated set is not maximal")
    return np.array(chosen, dtype=np.intp)


def separated_indices(
    sample: WitnessSample,
    m: Metric,
    sys: DynamicalSystem,
    n: int,
    eps: float,
    table: OrbitTable | None = None,
) -> np.ndarray:
    """Sample indices of a maximal (n, ε)-separated subset, in sample order."""
    if eps <= 0:
        raise ValueError("ε must be positive")
    table = table or OrbitTable.build(sys, sample.points, n)
    bound = m.bind(sample.space)
    return _greedy(table, bound, n, eps, NeighborIndex.build(bound, table, n))


def greedy_maximal_separated(
    sample: WitnessSample,
    m: Metric,
    sys: DynamicalSystem,
    n: int,
    eps: float,
) -> list[Point]:
    """Maximal (n, ε)-separated subset of the sample, greedy in sample order.

    The ε d_n-balls around the result cover the sample.
    """
    chosen = separated_indices(sample, m, sys, n, eps)
    return [sample.point(int(i)) for i in chosen]


@dataclass
class SeparatedSets:
    """Separated sets of one ε for n = 1..n_max and how many were replaced."""

    eps: float
    per_n: list[np.ndarray] = field(default_factory=list)
    repairs: int = 0


def _separated_sets(
    table: OrbitTable,
    bound: Metric,
    eps_grid: Sequence[float],
    n_max: int,
) -> list[SeparatedSets]:
    """Separated sets per (ε, n), repaired to be monotone in both.

    An (n-1)-separated set is n-separated and an ε-separated set is
    ε'-separated for ε' < ε, so a smaller greedy set is replaced by the
    larger certified one. Greedy sets need not be monotone, so repairs are
    counted rather than treated as errors.
    """
    sets = [SeparatedSets(eps) for eps in eps_grid]
    for n in range(1, n_max + 1):
        index = NeighborIndex.build(bound, table, n)
        for e, eps in enumerate(eps_grid):
            found = _greedy(table, bound, n, eps, index)
            if n > 1 and len(found) < len(sets[e].per_n[-1]):
                logger.debug("ε=%g n=%d: kept the larger (n-1)-separated set", eps, n)
                found = sets[e].per_n[-1]
                sets[e].repairs += 1
            if e > 0 and len(found) < len(sets[e - 1].per_n[n - 1]):
                logger.debug("ε=%g n=%d: kept the larger set of ε=%g", eps, n, eps_grid[e - 1])
                found = sets[e - 1].per_n[n - 1]
                sets[e].repairs += 1
            sets[e].per_n.append(found)
    return sets


def _descending(eps_grid: Sequence[float]) -> list[float]:
    grid = sorted({float(e) for e in eps_grid}, reverse=True)
    if not grid:
        raise ValueError("ε grid must not be empty")
    if grid[-1] <= 0:
        raise ValueError("ε values must be positive")
    return grid


def _escape_warnings(table: OrbitTable, bound: Metric) -> list[str]:
    escaped = int(table.escaped().sum())
    if escaped and isinstance(bound, EuclideanMetric):
        message = f"{escaped} orbit(s) leave the ball of radius 1e12"
        logger.warning(message)
        return [message]
    return []


def _series_from_sets(
    method: str,
    label: str,
    sets: SeparatedSets,
    sample_size: int,
    window: tuple[int, int] | None,
    params: dict[str, Any],
    warnings: Sequence[str] = (),
) -> GrowthSeries:
    return GrowthSeries.from_counts(
        method,
        label,
        [len(s) for s in sets.per_n],
        exact=False,
        sample_size=sample_size,
        window=window,
        params={**params, "repairs": sets.repairs},
        warnings=warnings,
    )


def separated_count_series(
    sample: WitnessSample,
    m: Metric,
    sys: DynamicalSystem,
    eps: float,
    n_max: int,
    *,
    window: tuple[int, int] | None = None,
) -> GrowthSeries:
    """log s_n(ε) for n = 1..n_max."""
    table = OrbitTable.build(sys, sample.points, n_max)
    bound = m.bind(sample.space)
    (sets,) = _separated_sets(table, bound, [eps], n_max)
    return _series_from_sets(
        "separated",
        f"eps={eps:g}",
        sets,
        len(sample),
        window,
        {"eps": eps},
        _escape_warnings(table, bound),
    )


def spanning_count_series(
    sample: WitnessSample,
    m: Metric,
    sys: DynamicalSystem,
    eps: float,
    n_max: int,
    *,
    window: tuple[int, int] | None = None,
) -> GrowthSeries:
    """log N_Y(B_{d_n}(ε)) for n = 1..n_max, balls centred at sample points."""
    table = OrbitTable.build(sys, sample.points, n_max)
    bound = m.bind(sample.space)
    counts = []
    exact = []
    universe = (1 << len(sample)) - 1
    for n in range(1, n_max + 1):
        sets = _ball_sets(table, m, n, eps)
        separated = _greedy(table, bound, n, eps, NeighborIndex.build(bound, table, n))
        result = solve_set_cover(sets, universe, known_cover=separated.tolist())
        counts.append(result.size)
        exact.append(result.exact)
    return GrowthSeries.from_counts(
        "spanning",
        f"eps={eps:g}",
        counts,
        exact=exact,
        sample_size=len(sample),
        window=window,
        params={"eps": eps},
    )


def submultiplicative_violations(series: GrowthSeries) -> list[tuple[int, int]]:
    """Pairs (n, q) with N_n > N_q * N_{n-q}, read off a spanning series."""
    counts = {e.n: e.count for e in series.entries}
    return [
        (n, q)
        for n in counts
        for q in range(1, n)
        if q in counts and n - q in counts and counts[n] > counts[q] * counts[n - q]
    ]


def _ball_sets(table: OrbitTable, m: Metric, n: int, eps: float) -> list[int]:
    return [bitset_from_indices(row, table.size) for row in ball_supports(table, m, n, eps)]


# Estimators


def d_entropy_estimate(
    sys: DynamicalSystem,
    m: Metric,
    sample: WitnessSample,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    n_max: int = 12,
    *,
    window: tuple[int, int] | None = None,
) -> EntropyReport:
    """Whole-sample separated-set growth, maximised over ε."""
    grid = _descending(eps_grid)
    table = OrbitTable.build(sys, sample.points, n_max)
    bound = m.bind(sample.space)
    warnings = _escape_warnings(table, bound)
    sets = _separated_sets(table, bound, grid, n_max)
    series = [
        _series_from_sets(
            "separated", f"eps={s.eps:g}", s, len(sample), window, {"eps": s.eps}
        )
        for s in sets
    ]
    return EntropyReport.build(
        "d_entropy",
        sys.describe(),
        series,
        metric=m.describe(),
        params={"eps": grid, "n_max": n_max, "sample": sample.describe()},
        warnings=warnings,
    )


def _compact_sample(
    sys: DynamicalSystem,
    compact: CompactBox | None,
    grid_size: int | None,
    n_max: int,
) -> WitnessSample:
    """Grid of K, or every admissible word long enough for n_max shifts."""
    if not sys.space.symbolic:
        return grid_sample(sys.space, grid_size, compact)
    sft, k = underlying_shift(sys)
    return words_sample(sft, grid_size or (n_max - 1) * k + 4)


def _compact_label(compact: CompactBox | None) -> str:
    if compact is None:
        return "X"
    return "x".join(f"[{lo:g},{hi:g}]" for lo, hi in zip(compact.lower, compact.upper))


def bowen_entropy_estimate(
    sys: DynamicalSystem,
    m: Metric,
    compacts: Sequence[CompactBox | None],
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    n_max: int = 12,
    *,
    grid_size: int | None = None,
    window: tuple[int, int] | None = None,
) -> EntropyReport:
    """Separated-set growth of grid samples of each compact, maximised over (K, ε).

    Starting points stay in K; separation uses the whole orbits. ``None``
    stands for the whole space of a compact system.
    """
    grid = _descending(eps_grid)
    if not compacts:
        raise ValueError("need at least one compact")
    space = sys.space
    bound = m.bind(space)
    series = []
    warnings = []
    for compact in compacts:
        sample = _compact_sample(sys, compact, grid_size, n_max)
        table = OrbitTable.build(sys, sample.points, n_max)
        warnings.extend(_escape_warnings(table, bound))
        label = _compact_label(compact)
        for found in _separated_sets(table, bound, grid, n_max):
            series.append(
                _series_from_sets(
                    "separated",
                    f"K={label},eps={found.eps:g}",
                    found,
                    len(sample),
                    window,
                    {"eps": found.eps, "compact": label},
                )
            )
    return EntropyReport.build(
        "bowen",
        sys.describe(),
        series,
        metric=m.describe(),
        params={
            "eps": grid,
            "n_max": n_max,
            "compacts": [_compact_label(c) for c in compacts],
        },
        warnings=warnings,
    )


def topological_entropy_estimate(
    sys: DynamicalSystem,
    covers: Sequence[Cover],
    sample: WitnessSample | None,
    n_max: int = 12,
    *,
    window: tuple[int, int] | None = None,
    labels: Sequence[str] | None = None,
) -> EntropyReport:
    """Growth of N(𝒜^n) maximised over a family of admissible covers."""
    for i, cover in enumerate(covers):
        if not is_admissible(cover).admissible:
            raise NonAdmissibleCoverError(i)
    series = []
    symbolic = True
    for i, cover in enumerate(covers):
        results = subcover_counts(cover, sys, n_max, sample)
        exact_symbolic = is_symbolic_cover(cover, sys)
        symbolic = symbolic and exact_symbolic
        label = labels[i] if labels else f"cover{i}"
        series.append(
            GrowthSeries.from_counts(
                "cover",
                label,
                [r.size for r in results],
                exact=[r.exact for r in results],
                sample_size=None if exact_symbolic else len(sample),
                window=window,
                params={"elements": len(cover), "kind": cover.kind},
            )
        )
    return EntropyReport.build(
        "topological",
        sys.describe(),
        series,
        params={"n_max": n_max, "covers": len(covers)},
        symbolic=symbolic,
    )


# Checks


@dataclass(frozen=True)
class SandwichReport:
    """N_Y(B_{d_n}(ε)) <= s_n(ε, Y) <= N_Y(B_{d_n}(ε/2)).

    ``raw_spanning`` is the set-cover answer for the ε-balls and
    ``spanning`` the smaller of it and the separated-set cover. A greedy
    answer only bounds the minimum from above, so the left inequality is
    asserted only when ``exact_low`` is set; the right one always is.
    """

    spanning: int
    separated: int
    spanning_half: int
    raw_spanning: int
    exact_low: bool
    exact_high: bool

    @property
    def exact(self) -> bool:
        return self.exact_low and self.exact_high

    @property
    def ok(self) -> bool:
        left = self.raw_spanning <= self.separated or not self.exact_low
        return left and self.separated <= self.spanning_half

    def as_tuple(self) -> tuple[int, int, int]:
        return self.spanning, self.separated, self.spanning_half


def sandwich_check(
    sample: WitnessSample,
    m: Metric,
    sys: DynamicalSystem,
    n: int,
    eps: float,
) -> SandwichReport:
    table = OrbitTable.build(sys, sample.points, n)
    bound = m.bind(sample.space)
    separated = _greedy(table, bound, n, eps, NeighborIndex.build(bound, table, n))
    universe = (1 << len(sample)) - 1
    low = solve_set_cover(_ball_sets(table, m, n, eps), universe)
    high = solve_set_cover(_ball_sets(table, m, n, eps / 2.0), universe)
    report = SandwichReport(
        spanning=min(low.size, len(separated)),
        separated=len(separated),
        spanning_half=high.size,
        raw_spanning=low.size,
        exact_low=low.exact,
        exact_high=high.exact,
    )
    if not report.ok:
        raise InvariantViolation(f"sandwich fails at n={n}, ε={eps}: {report}")
    if not low.exact and low.size > len(separated):
        logger.debug("n=%d ε=%g: greedy cover %d above |E|=%d", n, eps, low.size, len(separated))
    return report


@dataclass(frozen=True)
class ScalingReport:
    k: int
    base: float
    iterated: float
    tolerance: float

    @property
    def ratio(self) -> float | None:
        if self.base <= self.tolerance:
            return None
        return self.iterated / self.base

    @property
    def ok(self) -> bool:
        return self.k * self.base >= self.iterated - self.tolerance

    def within(self, lower: float, upper: float) -> bool:
        ratio = self.ratio
        return ratio is not None and lower * self.k <= ratio <= upper * self.k


def iterate_scaling_check(
    sys: DynamicalSystem,
    estimator: Callable[[DynamicalSystem], EntropyReport],
    k: int,
    *,
    tolerance: float = CHAIN_TOLERANCE,
) -> ScalingReport:
    """Compare the estimate for T with the one for T^k.

    Raises:
        InvariantViolation: h(T^k) exceeds k h(T) by more than ``tolerance``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    base = estimator(sys).headline
    iterated = estimator(Iterate(base=sys, k=k)).headline
    report = ScalingReport(k, base, iterated, tolerance)
    logger.info("iterate scaling k=%d: h(T)=%.4f h(T^k)=%.4f", k, base, iterated)
    if not report.ok:
        raise InvariantViolation(
            f"h(T^{k}) = {iterated:.4f} exceeds {k} h(T) = {k * base:.4f} beyond {tolerance:g}"
        )
    return report


class ChainLink(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: str
    upper: str
    lhs: float
    rhs: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance


class AuditReport(BaseModel):
    """h_KS <= h_top <= h_B <= h^d with every series behind them."""

    model_config = ConfigDict(frozen=True)

    system: dict[str, Any]
    metric: dict[str, Any]
    h_ks: float
    h_top: float
    h_bowen: float
    h_d: float
    chain: list[ChainLink]
    easy_bounds: list[float]
    comparisons: dict[str, dict[str, float]] = Field(default_factory=dict)
    minimal: bool | None = None
    reports: dict[str, EntropyReport]

    @property
    def ok(self) -> bool:
        return all(link.ok for link in self.chain)


def _residual(report: EntropyReport) -> float:
    best = report.best
    return best.residual if best is not None else 0.0


def ks_entropy_estimate(
    sys: DynamicalSystem,
    partitions: Sequence[Cover],
    n_max: int,
    *,
    grid_size: int | None = None,
    window: tuple[int, int] | None = None,
) -> EntropyReport:
    """KS growth maximised over the constructed invariant measures and a partition family."""
    depth = max(
        (max((getattr(e, "depth", 1) for e in p.elements), default=1) for p in partitions),
        default=1,
    )
    measures = invariant_measures(
        sys, partitions, grid_size=grid_size, word_length=n_max + depth, steps=n_max
    )
    warnings = [
        f"{c.name}: approximately invariant, defect at most 1/{n_max}"
        for c in measures
        if c.threshold > INVARIANCE_THRESHOLD
    ]
    series = [
        ks_entropy_over_partition(
            c.measure,
            sys,
            p,
            n_max,
            threshold=c.threshold,
            window=window,
            label=f"{c.name}/partition{i}",
        )
        for c in measures
        for i, p in enumerate(partitions)
    ]
    return EntropyReport.build(
        "ks",
        sys.describe(),
        series,
        params={
            "n_max": n_max,
            "partitions": len(partitions),
            "measures": [c.name for c in measures],
        },
        warnings=warnings,
    )


def variational_audit(
    sys: DynamicalSystem,
    metric: Metric,
    partitions: Sequence[Cover],
    covers: Sequence[Cover],
    sample: WitnessSample,
    compacts: Sequence[CompactBox | None],
    *,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    n_max: int = 12,
    comparison_metrics: Sequence[Metric] = (),
    tolerance: float = CHAIN_TOLERANCE,
    grid_size: int | None = None,
) -> AuditReport:
    """Estimate all four entropies and check their ordering.

    Raises:
        AuditFailure: a link of the chain fails beyond tolerance plus the
            fit residuals of the two estimates it compares.
    """
    ks = ks_entropy_estimate(sys, partitions, n_max, grid_size=grid_size)
    top = topological_entropy_estimate(sys, covers, sample, n_max)
    bowen = bowen_entropy_estimate(
        sys, metric, compacts, eps_grid, n_max, grid_size=grid_size
    )
    whole = d_entropy_estimate(sys, metric, sample, eps_grid, n_max)
    reports = {"ks": ks, "topological": top, "bowen": bowen, "d_entropy": whole}
    order = [("ks", ks), ("topological", top), ("bowen", bowen), ("d_entropy", whole)]
    chain = [
        ChainLink(
            lower=a,
            upper=b,
            lhs=ra.headline,
            rhs=rb.headline,
            tolerance=tolerance + _residual(ra) + _residual(rb),
        )
        for (a, ra), (b, rb) in zip(order, order[1:])
    ]
    comparisons: dict[str, dict[str, float]] = {}
    minimal = None
    for other in comparison_metrics:
        key = other.kind
        other_bowen = bowen_entropy_estimate(
            sys, other, compacts, eps_grid, n_max, grid_size=grid_size
        )
        other_whole = d_entropy_estimate(sys, other, sample, eps_grid, n_max)
        reports[f"bowen[{key}]"] = other_bowen
        reports[f"d_entropy[{key}]"] = other_whole
        comparisons[key] = {
            "bowen": other_bowen.headline,
            "d_entropy": other_whole.headline,
        }
    compactified = [metric] + list(comparison_metrics)
    for candidate in compactified:
        if isinstance(candidate, Compactified):
            value = (
                whole.headline
                if candidate is metric
                else comparisons[candidate.kind]["d_entropy"]
            )
            minimal = abs(value - top.headline) <= tolerance
    report = AuditReport(
        system=sys.describe(),
        metric=metric.describe(),
        h_ks=ks.headline,
        h_top=top.headline,
        h_bowen=bowen.headline,
        h_d=whole.headline,
        chain=chain,
        easy_bounds=[top.headline + (2.0 + math.log(2.0)) / k for k in range(1, 5)],
        comparisons=comparisons,
        minimal=minimal,
        reports=reports,
    )
    if not report.ok:
        broken = [f"{c.lower} <= {c.upper}" for c in chain if not c.ok]
        raise AuditFailure(f"entropy chain fails: {', '.join(broken)}", report)
    return report
