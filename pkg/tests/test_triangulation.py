import logging

import pytest

from sobext.plgeom import JordanPolygon, orient2d
from sobext.triangulation import Triangulation, triangulate

from .conftest import COMB, L_SHAPE, UNIT_SQUARE

logger = logging.getLogger(__name__)


@pytest.mark.parametrize("points", [UNIT_SQUARE, L_SHAPE, COMB])
def test_triangulate(points) -> None:
    polygon = JordanPolygon(tuple(points))
    triangles = triangulate(polygon)
    assert len(triangles) == len(points) - 2
    for a, b, c in triangles:
        v = polygon.vertices
        assert orient2d(v[a], v[b], v[c]) > 0
    assert Triangulation(polygon, triangles).area() == pytest.approx(polygon.area)


def test_triangulate_rejects_non_simple() -> None:
    # counterclockwise overall but with a crossing pair of edges
    polygon = JordanPolygon(((0, 0), (4, 0), (4, 2), (1, -1), (0, 2)))
    with pytest.raises(ValueError, match="not simple"):
        triangulate(polygon)


def test_adjacency_is_symmetric() -> None:
    triangulation = Triangulation.of(JordanPolygon(tuple(COMB)))
    # dual graph of a polygon triangulation is a tree
    edges = set()
    for t in range(len(triangulation.triangles)):
        for other, (u, v) in triangulation.adjacent(t):
            assert any(o == t for o, _ in triangulation.adjacent(other))
            edges.add(frozenset((t, other)))
    assert len(edges) == len(triangulation.triangles) - 1


def test_locate() -> None:
    triangulation = Triangulation.of(JordanPolygon(tuple(L_SHAPE)))
    t = triangulation.locate((1.5, 0.5))
    a, b, c = (triangulation.polygon.vertices[i] for i in triangulation.triangles[t])
    assert orient2d(a, b, (1.5, 0.5)) >= 0
    with pytest.raises(ValueError, match="outside the triangulated polygon"):
        triangulation.locate((1.5, 1.5))
