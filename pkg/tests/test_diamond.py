import logging

import numpy as np
import pytest

from sobext.diamond import (
    PLArc,
    PLBoundaryMap,
    SquareChart,
    diamond_point,
    diamond_u,
    height_of_u,
    in_diamond,
    left_u,
    right_u,
    segment_fraction,
)
from sobext.plgeom import PolyLine

from .conftest import L_SHAPE, assert_close

logger = logging.getLogger(__name__)


@pytest.mark.parametrize(
    "u,point",
    [
        (0.0, (0.0, -1.0)),
        (0.125, (0.5, -0.5)),
        (0.25, (1.0, 0.0)),
        (0.5, (0.0, 1.0)),
        (0.75, (-1.0, 0.0)),
        (0.875, (-0.5, -0.5)),
    ],
)
def test_diamond_parameter(u, point) -> None:
    assert diamond_point(u) == pytest.approx(point)
    assert diamond_u(point) == pytest.approx(u)


def test_diamond_u_off_boundary() -> None:
    with pytest.raises(ValueError, match="not on the diamond boundary"):
        diamond_u((0.1, 0.1))


def test_segment_ends() -> None:
    for s in np.linspace(-0.9, 0.9, 7):
        assert diamond_point(right_u(s)) == pytest.approx((1 - abs(s), s))
        assert diamond_point(left_u(s)) == pytest.approx((abs(s) - 1, s))
        assert height_of_u(right_u(s)) == pytest.approx(s)
        assert height_of_u(left_u(s)) == pytest.approx(s)


def test_segment_fraction() -> None:
    assert segment_fraction((0.0, 0.5)) == (0.5, 0.5)
    assert segment_fraction((-0.5, 0.5)) == (0.5, 0.0)
    assert segment_fraction((0.0, 1.0)) == (1.0, 0.5)
    assert in_diamond((0.5, 0.5))
    assert not in_diamond((0.6, 0.5))


class TestPLArc:
    def test_validation(self) -> None:
        with pytest.raises(ValueError, match="run from 0 to 1"):
            PLArc(np.array([0.0, 0.5]), np.zeros((2, 2)))
        with pytest.raises(ValueError, match="strictly increasing"):
            PLArc(np.array([0.0, 0.5, 0.5, 1.0]), np.zeros((4, 2)))
        with pytest.raises(ValueError, match="matching knots"):
            PLArc(np.array([0.0, 1.0]), np.zeros((3, 2)))

    def test_constant_speed(self) -> None:
        arc = PLArc.constant_speed(PolyLine(((0, 0), (1, 0), (1, 3))))
        assert_close(arc.knots, [0, 0.25, 1])
        assert arc.eval(0.5) == pytest.approx((1, 1))
        assert arc.length() == pytest.approx(4)

    def test_point_path(self) -> None:
        arc = PLArc.constant_speed(PolyLine(((0.5, 0.5),)))
        assert arc.eval(0.3) == (0.5, 0.5)
        assert arc.polyline().vertices == ((0.5, 0.5),)

    def test_reversed_and_blend(self) -> None:
        a = PLArc(np.array([0.0, 1.0]), np.array([[0, 0], [1, 0]]))
        b = PLArc(np.array([0.0, 0.5, 1.0]), np.array([[0, 1], [0.5, 2], [1, 1]]))
        assert a.reversed().start == (1, 0)
        middle = PLArc.blend(a, b, 0.5)
        assert_close(middle.knots, [0, 0.5, 1])
        assert middle.eval(0.5) == pytest.approx((0.5, 1))


class TestPLBoundaryMap:
    def test_identity_from_function(self) -> None:
        identity = PLBoundaryMap.from_function(lambda z: z, samples=8)
        assert len(identity.knots) == 8
        for u in np.linspace(0, 1, 13, endpoint=False):
            assert identity.eval_u(u) == pytest.approx(diamond_point(u))
        assert identity.length() == pytest.approx(4 * np.sqrt(2))

    def test_validation(self) -> None:
        with pytest.raises(ValueError, match="at least three knots"):
            PLBoundaryMap(np.array([0.0, 0.5]), np.zeros((2, 2)))
        with pytest.raises(ValueError, match=r"within \[0, 1\)"):
            PLBoundaryMap(np.array([0.0, 0.5, 1.0]), np.zeros((3, 2)))

    def test_from_polygon_is_constant_speed(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        assert phi.length() == pytest.approx(8)
        assert phi.max_speed() == pytest.approx(8)
        assert phi.eval_u(0.125) == pytest.approx((1, 0))
        assert phi.target_polygon().area == pytest.approx(3)

    def test_arc_restriction(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        arc = phi.arc(0.0, 0.25)
        assert arc.start == pytest.approx((0, 0))
        assert arc.end == pytest.approx((2, 0))
        # wrapping arc passes through the first knot
        wrap = phi.arc(0.875, 0.125)
        assert wrap.eval(0.5) == pytest.approx((0, 0))
        assert wrap.length() == pytest.approx(2)

    def test_full_turn_arc(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        arc = phi.arc(0.0, 0.0)
        assert arc.length() == pytest.approx(8)
        assert arc.start == arc.end

    def test_from_arcs(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        rebuilt = PLBoundaryMap.from_arcs(
            (i / 4, (i + 1) / 4, phi.arc(i / 4, (i + 1) / 4)) for i in range(4)
        )
        us = np.linspace(0, 1, 37)
        assert_close(rebuilt.eval_many(us), phi.eval_many(us))

    def test_parameter_of(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        assert phi.parameter_of((2, 0)) == pytest.approx(0.25)
        assert phi.parameter_of((0.5, 0.5)) is None

    def test_non_jordan_image(self) -> None:
        phi = PLBoundaryMap(
            np.array([0, 0.25, 0.5, 0.75]), np.array([[0, 0], [1, 1], [1, 0], [0, 1]])
        )
        with pytest.raises(ValueError, match="not a Jordan curve"):
            phi.target_polygon()

    def test_dict_round_trip(self) -> None:
        phi = PLBoundaryMap.from_polygon(L_SHAPE)
        again = PLBoundaryMap.from_dict(phi.to_dict())
        assert_close(again.points, phi.points)
        assert_close(again.knots, phi.knots)


class TestSquareChart:
    def test_corners(self) -> None:
        chart = SquareChart((0.5, 0.25), 0.25)
        assert chart.to_diamond((0.5, 0.25)) == pytest.approx((0, -1))
        assert chart.to_diamond((0.75, 0.25)) == pytest.approx((1, 0))
        assert chart.to_diamond((0.75, 0.5)) == pytest.approx((0, 1))
        assert chart.to_diamond((0.625, 0.375)) == pytest.approx((0, 0))

    def test_inverse(self, rng) -> None:
        chart = SquareChart((0.25, 0.5), 0.125)
        points = chart.origin + rng.random((20, 2)) * chart.side
        diamond = chart.to_diamond_many(points)
        for p, z in zip(points, diamond):
            assert chart.to_diamond(tuple(p)) == pytest.approx(tuple(z))
            assert chart.from_diamond(tuple(z)) == pytest.approx(tuple(p))
            assert in_diamond(tuple(z))

    @pytest.mark.parametrize("u", [0.0, 0.125, 0.25, 0.375, 0.625, 0.8125, 0.9375])
    def test_boundary_parameter_agrees(self, u) -> None:
        chart = SquareChart((0.0, 0.0), 0.5)
        point = chart.boundary_point(u)
        assert chart.boundary_u(point) == pytest.approx(u)
        assert chart.contains(point)

    def test_boundary_u_interior(self) -> None:
        with pytest.raises(ValueError, match="not on the square boundary"):
            SquareChart((0.0, 0.0), 1.0).boundary_u((0.5, 0.5))

    def test_quarters(self) -> None:
        quarters = SquareChart((0.0, 0.0), 1.0).quarters()
        assert [q.origin for q in quarters] == [(0, 0), (0.5, 0), (0, 0.5), (0.5, 0.5)]
        assert all(q.side == 0.5 for q in quarters)
