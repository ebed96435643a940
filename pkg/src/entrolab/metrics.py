"""Distances on state spaces and the dynamical metric d_n.

The heavy lifting is done on orbit tables: ``iterated_row`` returns the d_n
distances from one sample point to many others as a running maximum over the
cached orbit, and ``NeighborIndex`` narrows the candidates with a k-d tree
built on the (x, T^{n-1} x) embedding before the exact check.
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import Field, TypeAdapter

from .const import DEFAULT_SYMBOLIC_BASE
from .errors import EmptyOrbitError, WrongSpaceError
from .systems import (
    Descriptor,
    DynamicalSystem,
    OrbitTable,
    Point,
    Space,
    space_of,
)


def _arc(delta: np.ndarray) -> np.ndarray:
    delta = np.abs(delta) % 1.0
    return np.minimum(delta, 1.0 - delta)


def stereographic_embedding(coords: np.ndarray) -> np.ndarray:
    """Inverse stereographic image of R^d points on the unit sphere S^d.

    The last output coordinate is the height; infinity goes to the north pole.
    Written as ``1 - 2 / (1 + |x|^2)`` so huge inputs stay finite.
    """
    with np.errstate(over="ignore"):
        scale = 2.0 / (1.0 + np.square(coords).sum(axis=-1, keepdims=True))
    return np.concatenate([coords * scale, 1.0 - scale], axis=-1)


def circle_embedding(coords: np.ndarray) -> np.ndarray:
    """Unit-circle embedding of each periodic coordinate."""
    angle = 2.0 * np.pi * coords
    return np.concatenate([np.cos(angle), np.sin(angle)], axis=-1)


class Metric(Descriptor):
    def supports(self, space: Space) -> bool:
        raise NotImplementedError

    def check(self, space: Space) -> None:
        if not self.supports(space):
            raise WrongSpaceError(f"a space for the {self.kind} metric", space.label)

    def bind(self, space: Space) -> Metric:
        """The concrete metric used on ``space``."""
        self.check(space)
        return self

    @property
    def diameter_bound(self) -> float:
        return float("inf")

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise distances between rows of two broadcastable batches."""
        raise NotImplementedError

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None] | None:
        """Coordinates whose sup-norm distance is <= this metric, for pruning."""
        return None

    def iterated_row(
        self,
        table: OrbitTable,
        i: int,
        n: int,
        candidates: np.ndarray | None = None,
    ) -> np.ndarray:
        """d_n from sample point ``i`` to ``candidates`` (all points by default)."""
        if n < 1:
            raise EmptyOrbitError()
        if n > table.steps:
            raise ValueError(f"orbit table holds {table.steps} steps, asked for {n}")
        states = table.states[:n]
        others = states if candidates is None else states[:, candidates]
        return self.pairwise(others, states[:, i : i + 1]).max(axis=0)


class EuclideanMetric(Metric):
    kind: Literal["euclidean"] = "euclidean"

    def supports(self, space: Space) -> bool:
        return space.kind == "euclidean"

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.linalg.norm(a - b, axis=-1)

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None]:
        return states, None


class CircleArc(Metric):
    kind: Literal["circle"] = "circle"

    def supports(self, space: Space) -> bool:
        return space.kind == "circle" or (space.kind == "torus" and space.dim == 1)

    @property
    def diameter_bound(self) -> float:
        return 0.5

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return _arc(a - b)[..., 0]

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None]:
        return states, 1.0


class TorusMax(Metric):
    kind: Literal["torus"] = "torus"

    def supports(self, space: Space) -> bool:
        return space.periodic

    @property
    def diameter_bound(self) -> float:
        return 0.5

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return _arc(a - b).max(axis=-1)

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None]:
        return states, 1.0


class SymbolicCylinder(Metric):
    """d(u, v) = base ** (first disagreement index), 0 if equal on the overlap."""

    kind: Literal["symbolic"] = "symbolic"
    base: float = Field(DEFAULT_SYMBOLIC_BASE, gt=0.0, lt=1.0, alias="lambda")

    def supports(self, space: Space) -> bool:
        return space.symbolic

    @property
    def diameter_bound(self) -> float:
        return 1.0

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        width = min(a.shape[-1], b.shape[-1])
        mismatch = a[..., :width] != b[..., :width]
        first = np.where(mismatch.any(axis=-1), mismatch.argmax(axis=-1), -1)
        return np.where(first >= 0, self.base ** np.maximum(first, 0), 0.0)

    def iterated_row(
        self,
        table: OrbitTable,
        i: int,
        n: int,
        candidates: np.ndarray | None = None,
    ) -> np.ndarray:
        if n < 1:
            raise EmptyOrbitError()
        words = table.states if candidates is None else table.states[candidates]
        width = words.shape[1]
        mismatch = words != table.states[i]
        # next_mismatch[:, p] = first q >= p where the words differ (width if none)
        position = np.where(mismatch, np.arange(width), width)
        next_mismatch = np.minimum.accumulate(position[:, ::-1], axis=1)[:, ::-1]
        result = np.zeros(len(words))
        for j in range(n):
            start = j * table.shift
            if start >= width:
                break
            nxt = next_mismatch[:, start]
            term = np.where(nxt < width, self.base ** (nxt - start), 0.0)
            np.maximum(result, term, out=result)
        return result


class Compactified(Metric):
    """Metric induced by the one-point compactification.

    On R^d this is the chordal distance after inverse stereographic
    projection. The circle and torus are already compact, so there it is the
    chordal distance of the standard embedding.
    """

    kind: Literal["compactified"] = "compactified"

    def supports(self, space: Space) -> bool:
        return space.kind in ("euclidean", "circle", "torus")

    @property
    def diameter_bound(self) -> float:
        return 2.0

    def bind(self, space: Space) -> Metric:
        self.check(space)
        if space.kind == "euclidean":
            return Stereographic()
        return Chordal(dim=space.dim)


class Stereographic(Metric):
    kind: Literal["stereographic"] = "stereographic"

    def supports(self, space: Space) -> bool:
        return space.kind == "euclidean"

    @property
    def diameter_bound(self) -> float:
        return 2.0

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.linalg.norm(
            stereographic_embedding(a) - stereographic_embedding(b), axis=-1
        )

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None]:
        return stereographic_embedding(states), None


class Chordal(Metric):
    kind: Literal["chordal"] = "chordal"
    dim: int = Field(1, ge=1)

    def supports(self, space: Space) -> bool:
        return space.periodic and space.dim == self.dim

    @property
    def diameter_bound(self) -> float:
        return 2.0 * float(np.sqrt(self.dim))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.linalg.norm(circle_embedding(a) - circle_embedding(b), axis=-1)

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, float | None]:
        return circle_embedding(states), None


MetricDescriptor = Annotated[
    Union[EuclideanMetric, CircleArc, TorusMax, SymbolicCylinder, Compactified],
    Field(discriminator="kind"),
]

_metric_adapter: TypeAdapter[MetricDescriptor] = TypeAdapter(MetricDescriptor)


def parse_metric(data: dict) -> Metric:
    return _metric_adapter.validate_python(data)


def default_metric(space: Space) -> Metric:
    if space.kind == "euclidean":
        return EuclideanMetric()
    if space.kind == "circle":
        return CircleArc()
    if space.kind == "torus":
        return TorusMax()
    return SymbolicCylinder()


class NeighborIndex:
    """Shortlists the points that can lie in a d_n-ball.

    d_n(x, y) < eps forces d(x, y) < eps and d(T^{n-1}x, T^{n-1}y) < eps, so a
    sup-norm k-d tree over the joint embedding of both times returns a
    superset of every ball; callers confirm with ``Metric.iterated_row``.
    """

    def __init__(self, coords: np.ndarray, boxsize: float | None) -> None:
        from scipy.spatial import cKDTree

        self.coords = coords
        self.tree = cKDTree(coords, boxsize=boxsize)

    @classmethod
    def build(cls, metric: Metric, table: OrbitTable, n: int) -> NeighborIndex | None:
        first = metric.embed(table.at(0))
        if first is None:
            return None
        last, _ = metric.embed(table.at(n - 1))
        return cls(np.concatenate([first[0], last], axis=1), first[1])

    def candidates(self, i: int, eps: float) -> np.ndarray:
        found = self.tree.query_ball_point(self.coords[i], r=eps, p=np.inf)
        return np.sort(np.asarray(found, dtype=np.intp))


def _pair_space(x: Point, y: Point) -> Space:
    space = space_of(x)
    if space.kind != "word":
        space.check(y)
    elif not space.contains(y):
        raise WrongSpaceError(space.label, type(y).__name__)
    return space


def distance(m: Metric, x: Point, y: Point) -> float:
    space = _pair_space(x, y)
    bound = m.bind(space)
    return float(bound.pairwise(space.batch([x]), space.batch([y]))[0])


def compactified_distance(x: Point, y: Point) -> float:
    space = _pair_space(x, y)
    if space.kind != "euclidean":
        raise WrongSpaceError("euclidean", space.label)
    return distance(Compactified(), x, y)


def iterated_distance(
    m: Metric, sys: DynamicalSystem, n: int, x: Point, y: Point
) -> float:
    """max over j < n of d(T^j x, T^j y)."""
    if n < 1:
        raise EmptyOrbitError()
    space = sys.space
    space.check(x)
    space.check(y)
    table = OrbitTable.build(sys, space.batch([x, y]), n)
    return float(m.bind(space).iterated_row(table, 0, n, np.array([1]))[0])


def dn_ball_contains(
    m: Metric, sys: DynamicalSystem, n: int, center: Point, eps: float, q: Point
) -> bool:
    """Open d_n-ball membership."""
    return iterated_distance(m, sys, n, center, q) < eps


def dn_ball(
    metric: Metric,
    table: OrbitTable,
    i: int,
    n: int,
    eps: float,
    index: NeighborIndex | None = None,
) -> np.ndarray:
    """Sorted sample indices in the open d_n-ball of radius ``eps`` around ``i``.

    ``metric`` must already be bound to the table's space.
    """
    candidates = None if index is None else index.candidates(i, eps)
    hits = metric.iterated_row(table, i, n, candidates) < eps
    if candidates is None:
        return np.flatnonzero(hits)
    return candidates[hits]
