"""Experiment configuration files.

A config is one JSON object; unknown keys are rejected everywhere. Example::

    {
      "system": {"kind": "circle_affine", "m": 2},
      "metrics": [{"kind": "circle"}],
      "estimators": ["d_entropy", "topological"],
      "n_max": 12
    }
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .const import DEFAULT_EPS_GRID, DEFAULT_ORBIT_LENGTH
from .covers import Cover, build_admissible_cover, dyadic_partition, generating_partition
from .errors import ConfigError
from .metrics import Metric, MetricDescriptor, default_metric
from .samples import (
    CompactBox,
    WitnessSample,
    grid_sample,
    orbit_sample,
    random_sample,
    stereographic_sample,
    words_sample,
)
from .systems import System, underlying_shift

Estimator = Literal["d_entropy", "bowen", "topological", "ks", "spanning", "audit"]

# estimators that do not depend on the metric run once per config
METRIC_FREE = ("topological", "ks")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SampleSpec(_Strict):
    kind: Literal["grid", "random", "stereographic", "orbit", "words"] = "grid"
    # grid points per axis, random point count, orbit length, or word length
    size: Optional[int] = Field(None, ge=1)
    compact: Optional[CompactBox] = None
    # first point of an orbit sample; the origin when omitted
    start: Optional[list[float]] = None
    # add T^j x for j < n_max to grid and random samples
    orbits: bool = True


class CoverSpec(_Strict):
    """Admissible mesh covers: one per (compact, δ); cylinder depths on SFTs."""

    compacts: list[Optional[CompactBox]] = Field(default_factory=lambda: [None])
    deltas: list[float] = Field(default_factory=lambda: [0.25], min_length=1)
    depths: list[int] = Field(default_factory=lambda: [1], min_length=1)


class PartitionSpec(_Strict):
    depths: list[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    compact: Optional[CompactBox] = None


class ExperimentConfig(_Strict):
    system: System
    metrics: list[MetricDescriptor] = Field(default_factory=list)
    estimators: list[Estimator] = Field(default_factory=lambda: ["d_entropy"], min_length=1)
    eps: list[float] = Field(default_factory=lambda: list(DEFAULT_EPS_GRID), min_length=1)
    n_max: int = Field(12, ge=4)
    compacts: list[Optional[CompactBox]] = Field(default_factory=lambda: [None], min_length=1)
    covers: CoverSpec = Field(default_factory=CoverSpec)
    partitions: PartitionSpec = Field(default_factory=PartitionSpec)
    sample: SampleSpec = Field(default_factory=SampleSpec)
    grid_size: Optional[int] = Field(None, ge=2)
    window: Optional[tuple[int, int]] = None
    seed: int = Field(0, ge=0, lt=2**64)
    out: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _single_metric(cls, data: Any) -> Any:
        if isinstance(data, dict) and "metric" in data:
            if "metrics" in data:
                raise ValueError("give either 'metric' or 'metrics', not both")
            data = dict(data)
            data["metrics"] = [data.pop("metric")]
        return data

    @model_validator(mode="after")
    def _check(self) -> ExperimentConfig:
        if any(e <= 0 for e in self.eps):
            raise ValueError("ε values must be positive")
        if self.window is not None and not 1 <= self.window[0] < self.window[1] <= self.n_max:
            raise ValueError("window must satisfy 1 <= lo < hi <= n_max")
        space = self.system.space
        for m in self.metrics:
            m.check(space)
        start = self.sample.start
        if start is not None and not space.symbolic and len(start) != space.dim:
            raise ValueError(f"sample start needs {space.dim} coordinates")
        return self

    def metric_list(self) -> list[Metric]:
        return list(self.metrics) or [default_metric(self.system.space)]

    def jobs(self) -> list[tuple[Estimator, Optional[Metric]]]:
        """(estimator, metric) pairs in a fixed order."""
        out: list[tuple[Estimator, Optional[Metric]]] = []
        for estimator in self.estimators:
            if estimator in METRIC_FREE:
                out.append((estimator, None))
            else:
                out.extend((estimator, m) for m in self.metric_list())
        return out

    def build_sample(self) -> WitnessSample:
        space = self.system.space
        spec = self.sample
        if space.symbolic or spec.kind == "words":
            sft, k = underlying_shift(self.system)
            return words_sample(sft, spec.size or (self.n_max - 1) * k + 4)
        if spec.kind == "stereographic":
            return stereographic_sample(space, spec.size)
        if spec.kind == "orbit":
            start = space.point(spec.start or [0.0] * space.dim)
            return orbit_sample(self.system, start, spec.size or DEFAULT_ORBIT_LENGTH)
        if spec.kind == "random":
            sample = random_sample(space, spec.size or 1024, self.seed, spec.compact)
        else:
            sample = grid_sample(space, spec.size, spec.compact)
        if spec.orbits:
            sample = sample.with_orbits(self.system, self.n_max)
        return sample

    def build_covers(self) -> list[Cover]:
        space = self.system.space
        if space.symbolic:
            sft, _ = underlying_shift(self.system)
            return [generating_partition(sft, d) for d in self.covers.depths]
        return [
            build_admissible_cover(space, compact, delta)
            for compact in self.covers.compacts
            for delta in self.covers.deltas
        ]

    def build_partitions(self) -> list[Cover]:
        space = self.system.space
        if space.symbolic:
            sft, _ = underlying_shift(self.system)
            return [generating_partition(sft, d) for d in self.partitions.depths]
        return [
            dyadic_partition(space, d, self.partitions.compact)
            for d in self.partitions.depths
        ]


def _pointer(loc: tuple[Union[int, str], ...]) -> str:
    return "/" + "/".join(str(part) for part in loc)


def format_validation_error(error: ValidationError) -> str:
    return "\n".join(f"{_pointer(e['loc'])}: {e['msg']}" for e in error.errors())


def parse_config(data: Any) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("/: config must be a JSON object")
    return parse_config(data)
