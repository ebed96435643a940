"""Finite witness samples standing in for X and for compacts K."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .const import DEFAULT_GRID_SIZE, DEFAULT_TORUS_GRID_SIZE
from .errors import DegenerateCompactError
from .systems import (
    Descriptor,
    DynamicalSystem,
    OrbitTable,
    Point,
    ShiftSFT,
    Space,
    enumerate_words,
    orbit,
)


class CompactBox(Descriptor):
    """Closed box [lower, upper] in R^d (or a coordinate box on the torus)."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @classmethod
    def cube(cls, radius: float, dim: int = 1) -> CompactBox:
        return cls(lower=(-radius,) * dim, upper=(radius,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def require_nondegenerate(self) -> None:
        if (
            not self.lower
            or len(self.lower) != len(self.upper)
            or any(lo >= hi for lo, hi in zip(self.lower, self.upper))
        ):
            raise DegenerateCompactError(self.lower, self.upper)

    def shrink(self, amount: float) -> CompactBox:
        return CompactBox(
            lower=tuple(lo + amount for lo in self.lower),
            upper=tuple(hi - amount for hi in self.upper),
        )

    def mask(self, batch: np.ndarray) -> np.ndarray:
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        return ((batch >= lower) & (batch <= upper)).all(axis=-1)

    def grid(self, size: int) -> np.ndarray:
        axes = [np.linspace(lo, hi, size) for lo, hi in zip(self.lower, self.upper)]
        return _product(axes)


def _product(axes: Sequence[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def _first_occurrences(batch: np.ndarray) -> np.ndarray:
    _, index = np.unique(batch, axis=0, return_index=True)
    return batch[np.sort(index)]


@dataclass(frozen=True)
class WitnessSample:
    """A nonempty batch of points of one space, with where it came from."""

    space: Space
    points: np.ndarray
    provenance: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.points) == 0:
            raise ValueError("a witness sample must not be empty")
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)

    def point(self, i: int) -> Point:
        return self.space.point(self.points[i])

    def describe(self) -> dict:
        info: dict = {"provenance": self.provenance, "size": len(self)}
        if self.seed is not None:
            info["seed"] = self.seed
        return info

    def with_orbits(self, sys: DynamicalSystem, steps: int) -> WitnessSample:
        """Add T^j x for j < steps; orbit points follow the originals."""
        if self.space.symbolic:
            return self
        table = OrbitTable.build(sys, self.points, steps)
        stacked = table.states.reshape(-1, self.points.shape[1])
        return WitnessSample(
            self.space,
            _first_occurrences(stacked),
            f"{self.provenance}+orbit",
            self.seed,
        )


def grid_sample(
    space: Space, size: int | None = None, compact: CompactBox | None = None
) -> WitnessSample:
    if space.kind == "circle":
        size = size or DEFAULT_GRID_SIZE
        points = (np.arange(size, dtype=float) / size)[:, None]
    elif space.kind == "torus":
        size = size or DEFAULT_TORUS_GRID_SIZE
        axis = np.arange(size, dtype=float) / size
        points = _product([axis] * space.dim)
    elif space.kind == "euclidean":
        compact = compact or CompactBox.cube(1.0, space.dim)
        compact.require_nondegenerate()
        points = compact.grid(size or DEFAULT_GRID_SIZE)
    else:
        raise ValueError("word spaces are sampled with words_sample")
    if compact is not None and space.periodic:
        compact.require_nondegenerate()
        points = points[compact.mask(points)]
    return WitnessSample(space, points, "grid")


def random_sample(
    space: Space,
    count: int,
    seed: int,
    compact: CompactBox | None = None,
    length: int = 16,
) -> WitnessSample:
    rng = np.random.default_rng(seed)
    if space.periodic:
        points = rng.random((count, space.dim))
    elif space.kind == "euclidean":
        compact = compact or CompactBox.cube(1.0, space.dim)
        compact.require_nondegenerate()
        points = rng.uniform(compact.lower, compact.upper, size=(count, space.dim))
    else:
        points = rng.integers(0, space.alphabet, size=(count, length))
    return WitnessSample(space, points, "random", seed)


def stereographic_sample(space: Space, size: int | None = None) -> WitnessSample:
    """Points of R^d evenly spaced in stereographic angle (infinity excluded)."""
    if space.kind != "euclidean":
        raise ValueError("stereographic samples live in R^d")
    size = size or DEFAULT_GRID_SIZE
    angles = -np.pi + 2.0 * np.pi * np.arange(1, size) / size
    axis = np.tan(angles / 2.0)
    return WitnessSample(space, _product([axis] * space.dim), "stereographic")


def orbit_sample(sys: DynamicalSystem, x: Point, length: int) -> WitnessSample:
    """Distinct points of (x, Tx, ..., T^{length-1}x) in orbit order."""
    space = sys.space
    points = space.batch(orbit(sys, x, length))
    return WitnessSample(space, _first_occurrences(points), "orbit")


def words_sample(sft: ShiftSFT, length: int) -> WitnessSample:
    return WitnessSample(sft.space, enumerate_words(sft, length), "words")
