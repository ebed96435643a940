import math

import numpy as np
import pytest

from entrolab.errors import EmptyOrbitError, WrongSpaceError
from entrolab.metrics import (
    Chordal,
    CircleArc,
    Compactified,
    EuclideanMetric,
    NeighborIndex,
    Stereographic,
    SymbolicCylinder,
    TorusMax,
    compactified_distance,
    default_metric,
    distance,
    dn_ball,
    dn_ball_contains,
    iterated_distance,
    parse_metric,
    stereographic_embedding,
)
from entrolab.samples import random_sample
from entrolab.systems import (
    Circle,
    CircleAffine,
    Euclidean,
    Identity,
    LinearMap,
    OrbitTable,
    ShiftSFT,
    Space,
    Torus,
    Word,
    apply,
)

DOUBLING = CircleAffine(m=2)


def test_euclidean_distance():
    assert distance(EuclideanMetric(), Euclidean((1.0,)), Euclidean((4.0,))) == 3.0


def test_circle_arc_wraps():
    assert distance(CircleArc(), Circle(0.9), Circle(0.1)) == pytest.approx(0.2)


def test_torus_max():
    d = distance(TorusMax(), Torus((0.1, 0.5)), Torus((0.95, 0.2)))
    assert d == pytest.approx(0.3)


def test_symbolic_first_disagreement():
    u = Word((0, 1, 1, 0), alphabet=2)
    v = Word((0, 1, 0, 0), alphabet=2)
    assert distance(SymbolicCylinder(), u, v) == pytest.approx(0.25)
    assert distance(SymbolicCylinder(), u, u) == 0.0
    assert distance(parse_metric({"kind": "symbolic", "lambda": 0.1}), u, v) == pytest.approx(0.01)


def test_compactified_is_bounded():
    far = compactified_distance(Euclidean((1e6,)), Euclidean((-1e6,)))
    assert far < 1e-5
    assert compactified_distance(Euclidean((0.0,)), Euclidean((1e300,))) == pytest.approx(2.0)


def test_stereographic_embedding_lands_on_sphere():
    coords = np.array([[0.0, 0.0], [3.0, -4.0], [1e200, 0.0]])
    image = stereographic_embedding(coords)
    assert np.linalg.norm(image, axis=1) == pytest.approx([1.0, 1.0, 1.0])


def test_compactified_binds_per_space():
    assert isinstance(Compactified().bind(Space(kind="euclidean", dim=2)), Stereographic)
    assert Compactified().bind(Space(kind="torus", dim=2)) == Chordal(dim=2)
    with pytest.raises(WrongSpaceError):
        Compactified().bind(Space(kind="word", alphabet=2))


def test_compactified_distance_needs_euclidean():
    with pytest.raises(WrongSpaceError):
        compactified_distance(Circle(0.1), Circle(0.2))


def test_wrong_space_metric():
    with pytest.raises(WrongSpaceError):
        distance(CircleArc(), Euclidean((0.0,)), Euclidean((1.0,)))


def test_default_metric():
    assert default_metric(Space(kind="circle")) == CircleArc()
    assert default_metric(Space(kind="word", alphabet=3)) == SymbolicCylinder()


def test_iterated_distance_doubling():
    # the gap doubles each step until it passes 1/2
    d = iterated_distance(CircleArc(), DOUBLING, 3, Circle(0.0), Circle(0.1))
    assert d == pytest.approx(0.4)
    assert iterated_distance(CircleArc(), DOUBLING, 1, Circle(0.0), Circle(0.1)) == pytest.approx(0.1)
    with pytest.raises(EmptyOrbitError):
        iterated_distance(CircleArc(), DOUBLING, 0, Circle(0.0), Circle(0.1))


def test_iterated_distance_linear():
    sys = LinearMap(matrix=((2.0,),))
    d = iterated_distance(EuclideanMetric(), sys, 4, Euclidean((0.0,)), Euclidean((0.125,)))
    assert d == pytest.approx(1.0)


def test_dn_ball_is_open():
    sys = Identity(on=Space(kind="euclidean", dim=1))
    assert not dn_ball_contains(EuclideanMetric(), sys, 1, Euclidean((0.0,)), 1.0, Euclidean((1.0,)))
    assert dn_ball_contains(EuclideanMetric(), sys, 1, Euclidean((0.0,)), 1.0, Euclidean((0.5,)))


def test_neighbor_index_matches_brute_force():
    sample = random_sample(Space(kind="circle"), 300, seed=7)
    table = OrbitTable.build(DOUBLING, sample.points, 5)
    index = NeighborIndex.build(CircleArc(), table, 5)
    assert index is not None
    for i in (0, 17, 123, 299):
        pruned = dn_ball(CircleArc(), table, i, 5, 0.05, index)
        brute = dn_ball(CircleArc(), table, i, 5, 0.05)
        assert pruned.tolist() == brute.tolist()
        assert i in brute


def test_symbolic_iterated_row_matches_pairwise():
    words = np.array([[0, 1, 0, 1, 1, 0], [0, 1, 0, 0, 1, 0], [1, 1, 0, 1, 1, 0]])
    sys = ShiftSFT(adjacency=((1, 1), (1, 1)))
    table = OrbitTable.build(sys, words, 3)
    metric = SymbolicCylinder()
    row = metric.iterated_row(table, 0, 3)
    expected = [
        max(metric.pairwise(table.at(j)[0], table.at(j)[k]) for j in range(3))
        for k in range(3)
    ]
    assert row == pytest.approx(expected)
    assert row[1] == pytest.approx(0.5)
    assert math.isclose(row[2], 1.0)


@pytest.mark.parametrize(
    "metric, space",
    [
        (EuclideanMetric(), Space(kind="euclidean", dim=2)),
        (CircleArc(), Space(kind="circle")),
        (TorusMax(), Space(kind="torus", dim=2)),
        (SymbolicCylinder(), Space(kind="word", alphabet=2)),
        (Compactified(), Space(kind="euclidean", dim=2)),
        (Compactified(), Space(kind="circle")),
    ],
)
def test_triangle_inequality(metric, space):
    points = random_sample(space, 600, seed=3).points
    if space.kind == "euclidean":
        points = 10.0 * points - 5.0
    a, b, c = points[0::3], points[1::3], points[2::3]
    bound = metric.bind(space)
    ab, bc, ac = bound.pairwise(a, b), bound.pairwise(b, c), bound.pairwise(a, c)
    assert (ac <= ab + bc + 1e-12).all()
    assert (bound.pairwise(a, a) == 0.0).all()
    assert bound.pairwise(a, b) == pytest.approx(bound.pairwise(b, a))


@pytest.mark.parametrize(
    "metric, sys, x, y",
    [
        (CircleArc(), DOUBLING, Circle(0.01), Circle(0.3)),
        (CircleArc(), CircleAffine(m=3, alpha=0.2), Circle(0.7), Circle(0.71)),
        (EuclideanMetric(), LinearMap(matrix=((1.5,),)), Euclidean((0.1,)), Euclidean((-0.2,))),
        (Compactified(), LinearMap(matrix=((2.0,),)), Euclidean((0.3,)), Euclidean((0.4,))),
    ],
)
@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_iterated_distance_recursion(metric, sys, x, y, n):
    step = max(
        distance(metric, x, y),
        iterated_distance(metric, sys, n - 1, apply(sys, x), apply(sys, y)),
    )
    assert iterated_distance(metric, sys, n, x, y) == pytest.approx(step)
