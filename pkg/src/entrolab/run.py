from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .config import METRIC_FREE, ExperimentConfig
from .const import CHAIN_TOLERANCE, DEFAULT_JOBS, REPORT_FILE, SERIES_DIR
from .errors import AuditFailure, EntrolabError
from .estimators import (
    AuditReport,
    bowen_entropy_estimate,
    d_entropy_estimate,
    ks_entropy_estimate,
    spanning_count_series,
    topological_entropy_estimate,
    variational_audit,
)
from .growth import EntropyReport, GrowthSeries
from .hash import config_digest
from .metrics import Metric
from .samples import WitnessSample
from .utils import slugify, write_csv, write_json

logger = logging.getLogger(__name__)

SERIES_FIELDS = ("label", "n", "count", "log_count", "h_n", "exact")
COMPARISON_FILE = "comparison.csv"
COMPACTIFIED = "compactified"

Report = Union[EntropyReport, AuditReport]


@dataclass(frozen=True)
class Job:
    estimator: str
    metric: Optional[Metric] = None

    @property
    def name(self) -> str:
        if self.metric is None:
            return self.estimator
        return f"{self.estimator}[{self.metric.kind}]"


@dataclass
class JobResult:
    job: Job
    report: Optional[Report] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def headline(self) -> Optional[float]:
        if isinstance(self.report, EntropyReport):
            return self.report.headline
        if isinstance(self.report, AuditReport):
            return self.report.h_d
        return None

    def to_dict(self) -> dict:
        return {
            "job": self.job.name,
            "estimator": self.job.estimator,
            "metric": self.job.metric.describe() if self.job.metric else None,
            "headline": self.headline,
            "error": self.error,
            "report": self.report.model_dump(mode="json") if self.report else None,
        }


def _spanning_report(config: ExperimentConfig, metric: Metric, sample: WitnessSample) -> EntropyReport:
    series = [
        spanning_count_series(
            sample, metric, config.system, eps, config.n_max, window=config.window
        )
        for eps in sorted(config.eps, reverse=True)
    ]
    return EntropyReport.build(
        "spanning",
        config.system.describe(),
        series,
        metric=metric.describe(),
        params={"eps": sorted(config.eps, reverse=True), "n_max": config.n_max},
    )


def execute(config: ExperimentConfig, job: Job, sample: WitnessSample) -> Report:
    """Run one estimator of the config."""
    sys = config.system
    metric = job.metric
    if job.estimator == "topological":
        return topological_entropy_estimate(
            sys, config.build_covers(), sample, config.n_max, window=config.window
        )
    if job.estimator == "ks":
        return ks_entropy_estimate(
            sys,
            config.build_partitions(),
            config.n_max,
            grid_size=config.grid_size,
            window=config.window,
        )
    assert metric is not None
    if job.estimator == "d_entropy":
        return d_entropy_estimate(
            sys, metric, sample, config.eps, config.n_max, window=config.window
        )
    if job.estimator == "bowen":
        return bowen_entropy_estimate(
            sys,
            metric,
            config.compacts,
            config.eps,
            config.n_max,
            grid_size=config.grid_size,
            window=config.window,
        )
    if job.estimator == "spanning":
        return _spanning_report(config, metric, sample)
    if job.estimator == "audit":
        return variational_audit(
            sys,
            metric,
            config.build_partitions(),
            config.build_covers(),
            sample,
            config.compacts,
            eps_grid=config.eps,
            n_max=config.n_max,
            grid_size=config.grid_size,
        )
    raise ValueError(f"unknown estimator {job.estimator!r}")


def _series_of(report: Report) -> list[tuple[str, GrowthSeries]]:
    if isinstance(report, AuditReport):
        return [
            (f"{key}__{s.label}", s)
            for key, sub in report.reports.items()
            for s in sub.series
        ]
    return [(s.label, s) for s in report.series]


@dataclass
class ExperimentRunner:
    """Runs every job of a config on a thread pool and writes the outputs.

    Series CSVs are written as soon as a job finishes. The report is written
    once all jobs are done, also when the run is interrupted, and keeps the
    job order of the config.
    """

    config: ExperimentConfig
    out_dir: Path
    jobs: int = DEFAULT_JOBS
    results: list[JobResult] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.out_dir = Path(self.out_dir)

    def _run_one(self, job: Job, sample: WitnessSample) -> JobResult:
        logger.info("Running %s...", job.name)
        try:
            report = execute(self.config, job, sample)
        except AuditFailure as e:
            logger.error("%s: %s", job.name, e)
            result = JobResult(job, e.report, str(e))
        except (EntrolabError, ValueError, ArithmeticError) as e:
            logger.error("%s failed: %s", job.name, e)
            return JobResult(job, None, f"{type(e).__name__}: {e}")
        except Exception as e:
            logger.exception("%s crashed", job.name)
            return JobResult(job, None, f"{type(e).__name__}: {e}")
        else:
            result = JobResult(job, report)
            logger.info("Finished %s: %.6f", job.name, result.headline)
        self._write_series(result)
        return result

    def _write_series(self, result: JobResult) -> None:
        if result.report is None:
            return
        prefix = slugify(result.job.name)
        for label, series in _series_of(result.report):
            path = self.out_dir / SERIES_DIR / f"{prefix}__{slugify(label)}.csv"
            write_csv(path, series.rows(), SERIES_FIELDS)

    def run(self, jobs: Optional[list[Job]] = None) -> list[JobResult]:
        jobs = jobs or [Job(e, m) for e, m in self.config.jobs()]
        sample = self.config.build_sample()
        logger.info("Sample: %s", sample.describe())
        self.results = []
        try:
            with ThreadPoolExecutor(max_workers=max(1, self.jobs)) as pool:
                futures = [pool.submit(self._run_one, job, sample) for job in jobs]
                for job, future in zip(jobs, futures):
                    try:
                        self.results.append(future.result())
                    except Exception as e:
                        logger.exception("%s failed", job.name)
                        self.results.append(JobResult(job, None, f"{type(e).__name__}: {e}"))
        finally:
            self.write_report()
        return self.results

    @property
    def failed(self) -> bool:
        return any(not r.ok for r in self.results)

    def write_report(self) -> Path:
        config = self.config.model_dump(mode="json", by_alias=True)
        return write_json(
            self.out_dir / REPORT_FILE,
            {
                "config": config,
                "config_digest": config_digest(config),
                "results": [r.to_dict() for r in self.results],
            },
        )


@dataclass(frozen=True)
class Comparison:
    rows: list[dict]
    compactified_minimal: Optional[bool]


def comparison_estimators(config: ExperimentConfig) -> list[str]:
    chosen = [e for e in config.estimators if e not in METRIC_FREE and e != "audit"]
    return chosen or ["d_entropy", "bowen"]


def compare_metrics(runner: ExperimentRunner) -> Comparison:
    """Run the metric-dependent estimators once per metric and tabulate headlines."""
    config = runner.config
    jobs = [
        Job(estimator, metric)
        for estimator in comparison_estimators(config)
        for metric in config.metric_list()
    ]
    results = runner.run(jobs)
    rows = [
        {
            "metric": r.job.metric.kind,
            "estimator": r.job.estimator,
            "headline": "" if r.headline is None else repr(r.headline),
        }
        for r in results
        if r.job.metric is not None
    ]
    write_csv(runner.out_dir / COMPARISON_FILE, rows, ("metric", "estimator", "headline"))
    minimal = None
    by_estimator: dict[str, dict[str, float]] = {}
    for r in results:
        if r.headline is not None and r.job.metric is not None:
            by_estimator.setdefault(r.job.estimator, {})[r.job.metric.kind] = r.headline
    for values in by_estimator.values():
        if COMPACTIFIED in values:
            attained = values[COMPACTIFIED] <= min(values.values()) + CHAIN_TOLERANCE
            minimal = attained if minimal is None else minimal and attained
    return Comparison(rows, minimal)
