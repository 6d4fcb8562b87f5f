import logging

import numpy as np
import pytest

from sobext.boundary_maps import IdentityMap, SmoothShear
from sobext.dyadic_grid import diagonal_grid
from sobext.linearizer import (
    UNMARKED,
    VERTEX,
    EdgeCurve,
    PLGrid,
    build_pl_grids,
    cross_level_marks,
    image_grid,
    linearize_sides,
    linearize_vertices,
    parametrize,
    preserve_cross_level,
    speed_ratio,
)
from sobext.plgeom import PolyLine, distance, point_segment_distance
from sobext.sobext_error import ConstructionError, InvariantViolation

from .conftest import assert_close

logger = logging.getLogger(__name__)


@pytest.fixture
def identity_levels():
    grids = {1: diagonal_grid(1), 2: diagonal_grid(2)}
    return build_pl_grids(IdentityMap(), grids)


def _distance_to(polyline: PolyLine, point) -> float:
    return min(point_segment_distance(point, a, b) for a, b in polyline.segments())


class TestMarks:
    def test_cross_level_marks(self) -> None:
        coarse, fine = diagonal_grid(1), diagonal_grid(2)
        marks_coarse, marks_fine = cross_level_marks(coarse, fine)
        # two coarse lines per direction meet four fine lines each
        assert sum(len(m) for m in marks_coarse.values()) == 16
        assert sum(len(m) for m in marks_fine.values()) == 16
        assert all(m[2] == 2 for items in marks_coarse.values() for m in items)
        assert all(m[2] == 1 for items in marks_fine.values() for m in items)
        assert all(0 < m[0] < 1 for items in marks_coarse.values() for m in items)

    def test_marked_samples_are_exact(self) -> None:
        coarse, fine = diagonal_grid(1), diagonal_grid(2)
        marks, _ = cross_level_marks(coarse, fine)
        sampled = image_grid(IdentityMap(), coarse, marks)
        for key, items in marks.items():
            edge = sampled.edges[key]
            for w, point, level in items:
                (index,) = np.flatnonzero(np.isclose(edge.params, w, atol=1e-15))
                assert edge.origin[index] == level
                assert tuple(edge.points[index]) == point


class TestImageGrid:
    def test_identity_vertices(self) -> None:
        grid = diagonal_grid(2)
        sampled = image_grid(IdentityMap(), grid)
        expected = grid.vertices.transpose(1, 0, 2).reshape(-1, 2)
        assert_close(sampled.vertex_images(), expected)
        assert len(sampled.marked_images()) == 0
        for edge in sampled.edges.values():
            assert edge.origin[0] == VERTEX and edge.origin[-1] == VERTEX
            assert np.all(edge.origin[1:-1] == UNMARKED)

    def test_edge_curve_helpers(self) -> None:
        edge = EdgeCurve(
            ("h", 0, 0), [[0, 0], [1, 0], [2, 0]], [0, 0.5, 1], [VERTEX, UNMARKED, VERTEX]
        )
        assert edge.length() == pytest.approx(2)
        assert edge.start == (0, 0) and edge.end == (2, 0)
        assert edge.arc().eval(0.25) == pytest.approx((0.5, 0))
        again = EdgeCurve.from_dict(edge.to_dict())
        assert again.key == edge.key
        assert_close(again.points, edge.points)
        with pytest.raises(ValueError, match="Marked parameter count"):
            edge.with_points(edge.points, edge.origin, [0.0])


class TestVertexLinearization:
    def test_germ_replaced_by_segment(self) -> None:
        grid = diagonal_grid(1)
        sampled = image_grid(IdentityMap(), grid)
        s = grid.vertex(0, 0)[0]
        sampled.edges[("h", 0, 0)] = EdgeCurve(
            ("h", 0, 0),
            [[s, s], [s + 0.004, s + 0.003], [s + 0.1, s], [s + 0.5, s]],
            [0.0, 0.008, 0.2, 1.0],
            [VERTEX, UNMARKED, UNMARKED, VERTEX],
        )
        stepped = linearize_vertices(sampled, 0.01)
        edge = stepped.edges[("h", 0, 0)]
        assert len(edge.points) == 4
        assert distance(edge.start, tuple(edge.points[1])) == pytest.approx(0.01)
        assert s < edge.points[1, 1] < s + 0.003
        assert 0.008 < edge.params[1] < 0.2
        assert edge.end == (s + 0.5, s)

    def test_straight_edges_unchanged(self) -> None:
        sampled = image_grid(IdentityMap(), diagonal_grid(1))
        stepped = linearize_vertices(sampled, 0.01)
        for key, edge in sampled.edges.items():
            assert_close(stepped.edges[key].points, edge.points)

    def test_overlapping_balls(self) -> None:
        sampled = image_grid(IdentityMap(), diagonal_grid(1))
        with pytest.raises(ConstructionError, match="not disjoint"):
            linearize_vertices(sampled, 0.2)

    def test_marked_point_in_ball(self) -> None:
        coarse = diagonal_grid(1)
        marks, _ = cross_level_marks(coarse, diagonal_grid(2))
        sampled = image_grid(IdentityMap(), coarse, marks)
        with pytest.raises(ConstructionError, match="Marked point within"):
            linearize_vertices(sampled, 0.0625)


class TestSideLinearization:
    def test_identity_sides_become_segments(self) -> None:
        sampled = image_grid(IdentityMap(), diagonal_grid(1))
        pl = linearize_sides(sampled, 0.1)
        assert pl.delta == 0.1
        assert all(len(e.points) == 2 for e in pl.edges.values())

    def test_curved_sides_stay_close(self) -> None:
        sampled = image_grid(SmoothShear(), diagonal_grid(1))
        pl = linearize_sides(sampled, 0.01, threads=2)
        for key, edge in sampled.edges.items():
            simplified = pl.edges[key]
            assert simplified.start == edge.start and simplified.end == edge.end
            line = simplified.polyline()
            gap = max(_distance_to(line, tuple(p)) for p in edge.points)
            assert gap <= pl.delta + 1e-12

    @pytest.mark.parametrize("delta", [0.0, 0.5, 0.6])
    def test_invalid_clearance(self, delta) -> None:
        sampled = image_grid(IdentityMap(), diagonal_grid(1))
        with pytest.raises(ValueError, match="must lie in"):
            linearize_sides(sampled, delta)


class TestBuild:
    def test_levels_share_marked_points(self, identity_levels) -> None:
        assert sorted(identity_levels) == [1, 2]
        assert preserve_cross_level(identity_levels[1], identity_levels[2]) == 16
        assert identity_levels[2].delta < identity_levels[1].delta

    def test_requires_consecutive_levels(self) -> None:
        grids = {1: diagonal_grid(1), 3: diagonal_grid(3)}
        with pytest.raises(ValueError, match="consecutive"):
            build_pl_grids(IdentityMap(), grids)

    def test_unexpected_intersections(self) -> None:
        coarse = linearize_sides(image_grid(IdentityMap(), diagonal_grid(1)), 0.1)
        fine = linearize_sides(image_grid(IdentityMap(), diagonal_grid(2)), 0.05)
        with pytest.raises(InvariantViolation, match="unexpected intersection"):
            preserve_cross_level(coarse, fine)
        with pytest.raises(ValueError, match="consecutive levels"):
            preserve_cross_level(fine, coarse)

    def test_cell_curve(self, identity_levels) -> None:
        pl = identity_levels[1]
        quad = pl.grid.quad(0)
        assert pl.cell_length(0) == pytest.approx(2.0)
        cell = pl.cell_map(0)
        for i, corner in enumerate(quad):
            assert cell.eval_u(i / 4) == pytest.approx(corner)
        curve = pl.cell_curve(0)
        assert curve.start == curve.end
        assert curve.length == pytest.approx(2.0)

    def test_cell_marked_and_pieces(self, identity_levels) -> None:
        pl = identity_levels[1]
        marked = pl.cell_marked(0)
        # four corners and two marks on every side
        assert len(marked) == 12
        us = [u for _, u in marked]
        assert us == sorted(us) and us[0] == 0.0
        pieces = pl.cell_pieces(0)
        assert len(pieces) == 12
        assert sum(p.length for p in pieces) == pytest.approx(2.0)
        # constant speed for the identity
        assert speed_ratio(pieces, 1) == pytest.approx(0.25)

    def test_dict_round_trip(self, identity_levels) -> None:
        pl = identity_levels[2]
        again = PLGrid.from_dict(pl.to_dict())
        assert again.level == 2 and again.delta == pl.delta
        assert set(again.edges) == set(pl.edges)
        for key, edge in pl.edges.items():
            assert_close(again.edges[key].points, edge.points)
            assert_close(again.edges[key].params, edge.params)


class TestParametrize:
    square = PolyLine(((0, 0), (1, 0), (1, 1), (0, 1), (0, 0)))

    def test_pieces_between_marks(self) -> None:
        pieces = parametrize(self.square, [((0, 0), 0.0), ((1, 0.5), 0.375)])
        assert [p.domain for p in pieces] == [(0.0, 0.375), (0.375, 1.0)]
        assert pieces[0].length == pytest.approx(1.5)
        assert pieces[1].length == pytest.approx(2.5)
        assert pieces[0](0.375) == pytest.approx((1, 0.5))

    def test_requires_two_marks(self) -> None:
        with pytest.raises(ValueError, match="At least two"):
            parametrize(self.square, [((0, 0), 0.0)])

    def test_mark_off_curve(self) -> None:
        with pytest.raises(ValueError, match="not on the curve"):
            parametrize(self.square, [((0, 0), 0.0), ((0.5, 0.5), 0.5)])

    def test_too_many_marks(self) -> None:
        marks = [((i / 17, 0.0), i / 68) for i in range(17)]
        with pytest.raises(ValueError, match="At most 16"):
            parametrize(self.square, marks)
