"""State spaces, points and the maps T that every entropy is computed for.

Systems are pydantic models so that they double as the JSON descriptors of
the CLI contract, e.g. ``{"kind": "circle_affine", "m": 2, "alpha": 0.0}``.
All of them act on *batches*: ``step`` maps an ``(N, dim)`` float array (or an
``(N, L)`` integer array of words) to the image batch, which is what the
estimators iterate over.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Annotated, Literal, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from .const import (
    ESCAPE_NORM,
    MOD1_SNAP_TOL,
    POWER_ITERATION_MAX_STEPS,
    POWER_ITERATION_RTOL,
)
from .errors import (
    EmptyOrbitError,
    EntrolabError,
    OrbitOverflowError,
    ReducibleSFTError,
    WrongSpaceError,
)

logger = logging.getLogger(__name__)


def reduce_mod1(x: np.ndarray | float) -> np.ndarray:
    """Reduce into [0, 1); values within the snap tolerance of 1.0 become 0.0."""
    arr = np.asarray(x, dtype=float)
    reduced = arr - np.floor(arr)
    return np.where(reduced >= 1.0 - MOD1_SNAP_TOL, 0.0, reduced)


# Points


@dataclass(frozen=True)
class Euclidean:
    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in np.atleast_1d(np.asarray(self.coords)))
        if not coords:
            raise ValueError("Euclidean point needs at least one coordinate")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class Circle:
    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "angle", float(reduce_mod1(self.angle)))


@dataclass(frozen=True)
class Torus:
    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in reduce_mod1(np.atleast_1d(self.coords)))
        if not coords:
            raise ValueError("Torus point needs at least one coordinate")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    alphabet: int

    def __post_init__(self) -> None:
        symbols = tuple(int(s) for s in self.symbols)
        if self.alphabet < 1:
            raise ValueError("alphabet size must be positive")
        if any(s < 0 or s >= self.alphabet for s in symbols):
            raise ValueError(
                f"word symbols {symbols} outside alphabet {{0..{self.alphabet - 1}}}"
            )
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)


Point = Union[Euclidean, Circle, Torus, Word]


class Descriptor(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    def describe(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class Space(Descriptor):
    """Which Point variant lives here, with its dimension or alphabet size."""

    kind: Literal["euclidean", "circle", "torus", "word"] = "euclidean"
    dim: int = Field(1, ge=1)
    alphabet: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_shape(self) -> Space:
        if self.kind == "circle" and self.dim != 1:
            raise ValueError("the circle has dimension 1")
        if self.kind == "word" and self.alphabet < 1:
            raise ValueError("a word space needs an alphabet of size >= 1")
        return self

    @property
    def compact(self) -> bool:
        return self.kind != "euclidean"

    @property
    def periodic(self) -> bool:
        return self.kind in ("circle", "torus")

    @property
    def symbolic(self) -> bool:
        return self.kind == "word"

    def contains(self, x: Point) -> bool:
        if self.kind == "euclidean":
            return isinstance(x, Euclidean) and len(x.coords) == self.dim
        if self.kind == "circle":
            return isinstance(x, Circle)
        if self.kind == "torus":
            return isinstance(x, Torus) and len(x.coords) == self.dim
        return isinstance(x, Word) and x.alphabet == self.alphabet

    def check(self, x: Point) -> None:
        if not self.contains(x):
            raise WrongSpaceError(self.label, type(x).__name__)

    @property
    def label(self) -> str:
        if self.kind == "word":
            return f"word[{self.alphabet}]"
        if self.kind == "circle":
            return "circle"
        return f"{self.kind}[{self.dim}]"

    def batch(self, points: Sequence[Point]) -> np.ndarray:
        """Stack points of this space into the array layout used by ``step``."""
        for x in points:
            self.check(x)
        if self.kind == "word":
            lengths = {len(x) for x in points}
            if len(lengths) > 1:
                raise ValueError("words in one batch must share a length")
            width = lengths.pop() if lengths else 0
            return np.array([x.symbols for x in points], dtype=np.int64).reshape(
                len(points), width
            )
        if self.kind == "circle":
            rows = [(x.angle,) for x in points]
        else:
            rows = [x.coords for x in points]
        return np.array(rows, dtype=float).reshape(len(points), self.dim)

    def point(self, row: np.ndarray | Sequence[float]) -> Point:
        """Inverse of ``batch`` for a single row."""
        if self.kind == "word":
            return Word(tuple(int(s) for s in np.asarray(row)), self.alphabet)
        if self.kind == "circle":
            return Circle(float(np.asarray(row).reshape(-1)[0]))
        if self.kind == "torus":
            return Torus(tuple(np.asarray(row, dtype=float).reshape(-1)))
        return Euclidean(tuple(np.asarray(row, dtype=float).reshape(-1)))


def space_of(x: Point) -> Space:
    if isinstance(x, Euclidean):
        return Space(kind="euclidean", dim=len(x.coords))
    if isinstance(x, Circle):
        return Space(kind="circle")
    if isinstance(x, Torus):
        return Space(kind="torus", dim=len(x.coords))
    return Space(kind="word", alphabet=x.alphabet)


# Systems


class DynamicalSystem(Descriptor):
    @property
    def space(self) -> Space:
        raise NotImplementedError

    def step(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fixed_points(self) -> list[Point]:
        """Known fixed points, used to build Dirac reference measures."""
        return []


class Identity(DynamicalSystem):
    kind: Literal["identity"] = "identity"
    on: Space = Field(default_factory=Space, alias="space")

    @property
    def space(self) -> Space:
        return self.on

    def step(self, batch: np.ndarray) -> np.ndarray:
        return batch


def _square(rows: tuple[tuple, ...], name: str) -> None:
    size = len(rows)
    if size == 0 or any(len(r) != size for r in rows):
        raise ValueError(f"{name} must be a nonempty square matrix")


class LinearMap(DynamicalSystem):
    kind: Literal["linear"] = "linear"
    matrix: tuple[tuple[float, ...], ...]

    @model_validator(mode="after")
    def _check_matrix(self) -> LinearMap:
        _square(self.matrix, "matrix")
        return self

    @property
    def space(self) -> Space:
        return Space(kind="euclidean", dim=len(self.matrix))

    @property
    def _transpose(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float).T

    def step(self, batch: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            out = batch @ self._transpose
        finite = np.isfinite(out).all(axis=-1)
        if not finite.all():
            raise OrbitOverflowError(int((~finite).sum()))
        return out

    def fixed_points(self) -> list[Point]:
        return [Euclidean((0.0,) * len(self.matrix))]


class CircleAffine(DynamicalSystem):
    """x -> m x + alpha (mod 1)."""

    kind: Literal["circle_affine"] = "circle_affine"
    m: int = 2
    alpha: float = 0.0

    @property
    def space(self) -> Space:
        return Space(kind="circle")

    def step(self, batch: np.ndarray) -> np.ndarray:
        return reduce_mod1(self.m * batch + self.alpha)

    def fixed_points(self) -> list[Point]:
        if self.m == 1:
            return []
        # (m - 1) x + alpha = j (mod 1)
        shift = self.m - 1
        return [Circle((j - self.alpha) / shift) for j in range(abs(shift))]


class TentMap(DynamicalSystem):
    kind: Literal["tent"] = "tent"
    slope: float = Field(2.0, gt=0.0, le=2.0)

    @property
    def space(self) -> Space:
        return Space(kind="euclidean", dim=1)

    def step(self, batch: np.ndarray) -> np.ndarray:
        return self.slope * np.minimum(batch, 1.0 - batch)

    def fixed_points(self) -> list[Point]:
        points: list[Point] = [Euclidean((0.0,))]
        if self.slope > 1.0:
            points.append(Euclidean((self.slope / (1.0 + self.slope),)))
        return points


class TorusEndomorphism(DynamicalSystem):
    kind: Literal["torus"] = "torus"
    matrix: tuple[tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check_matrix(self) -> TorusEndomorphism:
        _square(self.matrix, "matrix")
        return self

    @property
    def space(self) -> Space:
        return Space(kind="torus", dim=len(self.matrix))

    @property
    def _transpose(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float).T

    def step(self, batch: np.ndarray) -> np.ndarray:
        return reduce_mod1(batch @ self._transpose)

    def fixed_points(self) -> list[Point]:
        return [Torus((0.0,) * len(self.matrix))]


class ShiftSFT(DynamicalSystem):
    """One-sided shift on the words allowed by a 0/1 adjacency matrix."""

    kind: Literal["sft"] = "sft"
    adjacency: tuple[tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check_adjacency(self) -> ShiftSFT:
        _square(self.adjacency, "adjacency")
        for i, row in enumerate(self.adjacency):
            if any(a not in (0, 1) for a in row):
                raise ValueError("adjacency entries must be 0 or 1")
            if not any(row):
                raise ValueError(f"symbol {i} is a dead end (row of zeros)")
        return self

    @property
    def alphabet(self) -> int:
        return len(self.adjacency)

    @property
    def space(self) -> Space:
        return Space(kind="word", alphabet=self.alphabet)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=np.int64)

    def step(self, batch: np.ndarray) -> np.ndarray:
        if batch.shape[1] == 0:
            raise ValueError("cannot shift an empty word")
        return batch[:, 1:]

    def allowed(self, words: np.ndarray) -> np.ndarray:
        """Mask of the words (rows) whose consecutive pairs are all allowed."""
        if words.shape[1] < 2:
            return np.ones(len(words), dtype=bool)
        return self.matrix[words[:, :-1], words[:, 1:]].astype(bool).all(axis=1)


class Iterate(DynamicalSystem):
    """The k-fold composition T^k of a base system."""

    kind: Literal["iterate"] = "iterate"
    base: System
    k: int = Field(2, ge=1)

    @property
    def space(self) -> Space:
        return self.base.space

    def step(self, batch: np.ndarray) -> np.ndarray:
        for _ in range(self.k):
            batch = self.base.step(batch)
        return batch

    def fixed_points(self) -> list[Point]:
        return self.base.fixed_points()


System = Annotated[
    Union[Identity, LinearMap, CircleAffine, TentMap, TorusEndomorphism, ShiftSFT, Iterate],
    Field(discriminator="kind"),
]
Iterate.model_rebuild()

_system_adapter: TypeAdapter[System] = TypeAdapter(System)


def parse_system(data: dict) -> DynamicalSystem:
    return _system_adapter.validate_python(data)


# Operations


def apply(sys: DynamicalSystem, x: Point) -> Point:
    space = sys.space
    out = sys.step(space.batch([x]))
    return space.point(out[0])


def orbit(sys: DynamicalSystem, x: Point, n: int) -> list[Point]:
    """(x, Tx, ..., T^{n-1}x), each element computed from the previous one."""
    if n < 1:
        raise EmptyOrbitError()
    space = sys.space
    current = space.batch([x])
    points = [space.point(current[0])]
    for _ in range(n - 1):
        current = sys.step(current)
        points.append(space.point(current[0]))
    return points


@dataclass(frozen=True)
class OrbitTable:
    """Orbits of a whole sample, ``steps`` states per point.

    Continuous spaces store a ``(steps, N, dim)`` array. Word spaces store the
    original ``(N, L)`` words and the number of symbols one application of the
    map drops, so time ``j`` is the suffix starting at ``j * shift``.
    """

    space: Space
    states: np.ndarray
    steps: int
    shift: int = 0

    @classmethod
    def build(cls, sys: DynamicalSystem, batch: np.ndarray, steps: int) -> OrbitTable:
        if steps < 1:
            raise EmptyOrbitError()
        space = sys.space
        if space.symbolic:
            width = batch.shape[1]
            shift = width - sys.step(batch[:1]).shape[1] if width else 0
            if width < (steps - 1) * shift + 1:
                raise ValueError(
                    f"words of length {width} are too short for {steps} steps"
                )
            return cls(space, batch, steps, shift)
        rows = [batch]
        current = batch
        for _ in range(steps - 1):
            current = sys.step(current)
            rows.append(current)
        return cls(space, np.stack(rows), steps)

    @property
    def size(self) -> int:
        return self.states.shape[0] if self.space.symbolic else self.states.shape[1]

    def at(self, j: int) -> np.ndarray:
        if self.space.symbolic:
            return self.states[:, j * self.shift :]
        return self.states[j]

    def escaped(self) -> np.ndarray:
        """Points whose orbit norm exceeds the escape threshold."""
        if self.space.kind != "euclidean":
            return np.zeros(self.size, dtype=bool)
        return (np.abs(self.states).max(axis=(0, 2))) > ESCAPE_NORM


# Symbolic oracles


def underlying_shift(sys: DynamicalSystem) -> tuple[ShiftSFT, int]:
    """The SFT under nested iterates and the total number of shifts per step."""
    k = 1
    while isinstance(sys, Iterate):
        k *= sys.k
        sys = sys.base
    if not isinstance(sys, ShiftSFT):
        raise WrongSpaceError("a shift of finite type", sys.space.label)
    return sys, k


def admissible_words(sft: ShiftSFT, n: int) -> int:
    """Exact number W_n of admissible words of length n."""
    if n < 1:
        raise EmptyOrbitError()
    adjacency = np.array(sft.adjacency, dtype=object)
    counts = np.ones(sft.alphabet, dtype=object)
    for _ in range(n - 1):
        counts = adjacency.dot(counts)
    return int(counts.sum())


def enumerate_words(sft: ShiftSFT, n: int) -> np.ndarray:
    """All admissible words of length n, in lexicographic order."""
    if n < 1:
        raise EmptyOrbitError()
    words = np.arange(sft.alphabet, dtype=np.int64)[:, None]
    for _ in range(n - 1):
        rows, symbols = np.nonzero(sft.matrix[words[:, -1]])
        words = np.column_stack([words[rows], symbols])
    return words


def is_irreducible(sft: ShiftSFT) -> bool:
    reach = (sft.matrix + np.eye(sft.alphabet, dtype=np.int64)) > 0
    for _ in range(max(1, math.ceil(math.log2(sft.alphabet)) + 1)):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def _power_iteration(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    vector = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    value = 0.0
    for _ in range(POWER_ITERATION_MAX_STEPS):
        image = matrix @ vector
        new_value = float(image.sum())
        image /= new_value
        if (
            abs(new_value - value) <= POWER_ITERATION_RTOL * new_value
            and np.abs(image - vector).max() <= POWER_ITERATION_RTOL
        ):
            return new_value, image
        vector, value = image, new_value
    raise EntrolabError("power iteration did not converge")


def perron_data(sft: ShiftSFT) -> tuple[float, np.ndarray, np.ndarray]:
    """Perron root and positive left/right eigenvectors of the adjacency.

    The iteration runs on A + I, which is primitive whenever A is
    irreducible and has the same eigenvectors.
    """
    if not is_irreducible(sft):
        raise ReducibleSFTError()
    shifted = sft.matrix.astype(float) + np.eye(sft.alphabet)
    root, right = _power_iteration(shifted)
    _, left = _power_iteration(shifted.T)
    return root - 1.0, left, right


def sft_entropy_exact(sft: ShiftSFT) -> float:
    root, _, _ = perron_data(sft)
    logger.debug("Perron root of %s: %.12f", sft.adjacency, root)
    return math.log(root)
