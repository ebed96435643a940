"""Growth series of log counts, their fitted exponential rate, and reports."""

from __future__ import annotations

import math
from typing import Any, Literal, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .const import MIN_FIT_ENTRIES, SATURATION_FRACTION, ZERO_RATE_TOL
from .errors import NoEligibleSeriesError, SeriesTooShortError


class SeriesEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    log_count: float
    count: int | None = None
    exact: bool = True

    @property
    def rate(self) -> float:
        return self.log_count / self.n


class Fit(NamedTuple):
    rate: float
    intercept: float
    residual: float
    window: tuple[int, int]


def fit_window(
    entries: Sequence[SeriesEntry], sample_size: int | None = None
) -> tuple[int, int]:
    """Default tail window of a series.

    Counts taken on a finite sample stop growing once they approach the
    sample size, so the window ends at the last n whose count is at most
    ``SATURATION_FRACTION`` of it.
    """
    if len(entries) < MIN_FIT_ENTRIES:
        raise SeriesTooShortError(len(entries), MIN_FIT_ENTRIES)
    last = len(entries) - 1
    if sample_size is not None:
        limit = SATURATION_FRACTION * sample_size
        resolvable = [
            i for i, e in enumerate(entries) if e.count is None or e.count <= limit
        ]
        last = resolvable[-1] if resolvable else 0
        last = max(last, MIN_FIT_ENTRIES - 1)
    hi = entries[last].n
    lo = min(hi // 2, entries[last - MIN_FIT_ENTRIES + 1].n)
    return lo, hi


def fit_line(
    entries: Sequence[SeriesEntry],
    window: tuple[int, int] | None = None,
    sample_size: int | None = None,
) -> Fit:
    """Least-squares slope of log_count against n over the window.

    The residual is the root mean square deviation from the fitted line.
    """
    if len(entries) < MIN_FIT_ENTRIES:
        raise SeriesTooShortError(len(entries), MIN_FIT_ENTRIES)
    window = window or fit_window(entries, sample_size)
    chosen = [e for e in entries if window[0] <= e.n <= window[1]]
    if len(chosen) < 2:
        raise SeriesTooShortError(len(chosen), 2)
    ns = np.array([e.n for e in chosen], dtype=float)
    values = np.array([e.log_count for e in chosen])
    if np.ptp(values) == 0.0:
        return Fit(0.0, float(values[0]), 0.0, window)
    (slope, intercept), ssr, *_ = np.polyfit(ns, values, 1, full=True)
    residual = math.sqrt(float(ssr[0]) / len(chosen)) if len(ssr) else 0.0
    if abs(slope) < ZERO_RATE_TOL:
        slope = 0.0
    return Fit(float(slope), float(intercept), residual, window)


class GrowthSeries(BaseModel):
    """log N_n for n = 1..n_max together with its fitted rate."""

    model_config = ConfigDict(frozen=True)

    method: str
    label: str
    params: dict[str, Any] = Field(default_factory=dict)
    entries: list[SeriesEntry]
    fitted_rate: float
    residual: float = 0.0
    fit_window: tuple[int, int]
    exact: bool = True
    excluded: bool = False
    warnings: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> GrowthSeries:
        ns = [e.n for e in self.entries]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("series entries must be strictly increasing in n")
        if not math.isfinite(self.fitted_rate):
            raise ValueError("fitted rate must be finite")
        lo, hi = self.fit_window
        if ns and not (ns[0] <= lo <= hi <= ns[-1]):
            raise ValueError(f"fit window {self.fit_window} outside the series")
        return self

    @classmethod
    def from_counts(
        cls,
        method: str,
        label: str,
        counts: Sequence[int],
        *,
        exact: Sequence[bool] | bool = True,
        sample_size: int | None = None,
        window: tuple[int, int] | None = None,
        params: dict[str, Any] | None = None,
        warnings: Sequence[str] = (),
    ) -> GrowthSeries:
        """Series of log counts for n = 1, 2, ...; counts must be positive."""
        flags = [exact] * len(counts) if isinstance(exact, bool) else list(exact)
        entries = [
            SeriesEntry(n=n, log_count=math.log(c), count=int(c), exact=flag)
            for n, (c, flag) in enumerate(zip(counts, flags), start=1)
        ]
        return cls.from_entries(
            method,
            label,
            entries,
            sample_size=sample_size,
            window=window,
            params=params,
            warnings=warnings,
        )

    @classmethod
    def from_entries(
        cls,
        method: str,
        label: str,
        entries: Sequence[SeriesEntry],
        *,
        sample_size: int | None = None,
        window: tuple[int, int] | None = None,
        params: dict[str, Any] | None = None,
        warnings: Sequence[str] = (),
        excluded: bool = False,
    ) -> GrowthSeries:
        fit = fit_line(entries, window, sample_size)
        return cls(
            method=method,
            label=label,
            params=params or {},
            entries=list(entries),
            fitted_rate=fit.rate,
            residual=fit.residual,
            fit_window=fit.window,
            exact=all(e.exact for e in entries),
            excluded=excluded,
            warnings=list(warnings),
        )

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "label": self.label,
                "n": e.n,
                "count": "" if e.count is None else e.count,
                "log_count": repr(e.log_count),
                "h_n": repr(e.rate),
                "exact": int(e.exact),
            }
            for e in self.entries
        ]


def fit_rate(series: GrowthSeries | Sequence[SeriesEntry]) -> float:
    if isinstance(series, GrowthSeries):
        return series.fitted_rate
    return fit_line(series).rate


class EntropyReport(BaseModel):
    """Every series of one estimator run and the headline over the grid."""

    model_config = ConfigDict(frozen=True)

    estimator: str
    system: dict[str, Any]
    metric: dict[str, Any] | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    series: list[GrowthSeries]
    headline: float
    bound: Literal["lower", "exact"] = "lower"
    exact: bool = True
    warnings: list[str] = Field(default_factory=list)

    @classmethod
    def build(
        cls,
        estimator: str,
        system: dict[str, Any],
        series: Sequence[GrowthSeries],
        *,
        metric: dict[str, Any] | None = None,
        params: dict[str, Any] | None = None,
        symbolic: bool = False,
        warnings: Sequence[str] = (),
    ) -> EntropyReport:
        eligible = [s.fitted_rate for s in series if not s.excluded]
        if not eligible:
            raise NoEligibleSeriesError(estimator, len(series))
        exact = all(s.exact for s in series)
        notes = list(warnings)
        for s in series:
            notes.extend(f"{s.label}: {w}" for w in s.warnings)
        return cls(
            estimator=estimator,
            system=system,
            metric=metric,
            params=params or {},
            series=list(series),
            headline=max(eligible),
            bound="exact" if symbolic and exact else "lower",
            exact=exact,
            warnings=notes,
        )

    @property
    def best(self) -> GrowthSeries | None:
        eligible = [s for s in self.series if not s.excluded]
        return max(eligible, key=lambda s: s.fitted_rate, default=None)
