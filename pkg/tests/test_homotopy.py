import logging
import math

import numpy as np
import pytest
import shapely

from sobext.boundary_maps import IdentityMap
from sobext.diamond import PLBoundaryMap
from sobext.dyadic_grid import diagonal_grid
from sobext.homotopy import (
    BoundaryHomotopy,
    ChainHomotopy,
    Cross,
    CrossDeformation,
    GridLevelHomotopy,
    HalfFixedHomotopy,
    HomotopyMode,
    certify_cross,
    children_map,
    cross_deform,
    fraction_on,
    half_fixed_homotopy,
    join,
    prefix,
    subpath,
    suffix,
)
from sobext.linearizer import build_pl_grids
from sobext.plgeom import PolyLine, distance
from sobext.sobext_error import ConstructionError

from .conftest import assert_close

logger = logging.getLogger(__name__)

DIAMOND = [(0, -1), (1, 0), (0, 1), (-1, 0)]
BEND = PolyLine(((0, 0), (2, 0), (2, 2)))


def diamond_map(points) -> PLBoundaryMap:
    return PLBoundaryMap(np.array([0.0, 0.25, 0.5, 0.75]), np.array(points, dtype=float))


def plus_cross(length: float = 1.0) -> Cross:
    ends = [(length, 0.0), (0.0, length), (-length, 0.0), (0.0, -length)]
    return Cross((0.0, 0.0), [PolyLine(((0.0, 0.0), e)) for e in ends])


@pytest.fixture(scope="module")
def identity_levels():
    grids = {1: diagonal_grid(1), 2: diagonal_grid(2)}
    return build_pl_grids(IdentityMap(), grids)


@pytest.mark.parametrize(
    "name,expected",
    [
        ("auto", HomotopyMode.AUTO),
        ("STRAIGHT", HomotopyMode.STRAIGHT),
        ("migration", HomotopyMode.MIGRATION),
    ],
)
def test_homotopy_mode_get(name, expected) -> None:
    assert HomotopyMode.get(name) == expected
    assert str(expected) == expected.value


def test_homotopy_mode_get_invalid() -> None:
    with pytest.raises(ValueError, match="'bend' is not a valid HomotopyMode"):
        HomotopyMode.get("bend")


class TestPolylinePieces:
    def test_prefix_and_suffix(self) -> None:
        assert prefix(BEND, 0.5).vertices == ((0, 0), (2, 0))
        assert prefix(BEND, 0.25).vertices == ((0, 0), (1, 0))
        assert prefix(BEND, 0.0).vertices == ((0, 0),)
        assert suffix(BEND, 0.25).vertices == ((1, 0), (2, 0), (2, 2))

    def test_join(self) -> None:
        joined = join(prefix(BEND, 0.25), suffix(BEND, 0.25))
        assert joined.vertices == ((0, 0), (1, 0), (2, 0), (2, 2))
        with pytest.raises(ValueError, match="Cannot join"):
            join(prefix(BEND, 0.25), PolyLine(((5, 5), (6, 6))))

    def test_subpath(self) -> None:
        assert subpath(BEND, (1, 0), (2, 1)).vertices == ((1, 0), (2, 0), (2, 1))

    def test_fraction_on(self) -> None:
        assert fraction_on(BEND, (2, 1)) == pytest.approx(0.75)
        assert fraction_on(BEND, (1, 1)) is None


class TestHalfFixedHomotopy:
    lower = PolyLine(((0, 0), (0.5, -1), (1, 0)))
    upper = PolyLine(((0, 0), (0.5, 1), (1, 0)))

    def test_passes_through_shortest_curve(self) -> None:
        homotopy = HalfFixedHomotopy(self.lower, self.upper, nudge=False)
        assert homotopy.curve(0.0) is self.lower
        assert homotopy.curve(1.0) is self.upper
        assert homotopy.curve(0.5).vertices == ((0, 0), (1, 0))
        assert_close(homotopy.curve(0.375).vertices, [(0, 0), (0.25, -0.5), (1, 0)])
        assert homotopy.curve(0.75).vertices == self.upper.vertices

    def test_constant(self) -> None:
        homotopy = HalfFixedHomotopy(self.lower, self.lower)
        assert homotopy.constant
        assert homotopy.curve(0.3) is self.lower

    def test_requires_shared_ends(self) -> None:
        with pytest.raises(ValueError, match="share both endpoints"):
            HalfFixedHomotopy(self.lower, PolyLine(((0, 0), (2, 0))))

    def test_curves_meeting_inside(self) -> None:
        crossing = PolyLine(((0, 0), (0.3, 1), (0.5, -1), (1, 0)))
        with pytest.raises(ConstructionError, match="besides their endpoints"):
            HalfFixedHomotopy(PolyLine(((0, 0), (1, 0))), crossing)

    def test_time_outside_interval(self) -> None:
        homotopy = HalfFixedHomotopy(self.lower, self.upper, nudge=False)
        with pytest.raises(ValueError, match=r"outside \[0, 1\]"):
            homotopy.curve(1.5)

    def test_nudged_off_reflex_vertex(self) -> None:
        # the region between the curves has a reflex vertex at (0, 1)
        gamma0 = PolyLine(((1, 0), (0, 1), (-1, 0)))
        gamma1 = PolyLine(((1, 0), (0, 2), (-1, 0)))
        homotopy = HalfFixedHomotopy(gamma0, gamma1)
        assert homotopy.modifier is not None
        curve = homotopy.curve(0.4)
        assert curve.start == (1, 0) and curve.end == (-1, 0)
        assert (0.0, 1.0) not in curve.vertices
        nearest = min(curve.vertices, key=lambda v: distance(v, (0.0, 1.0)))
        assert 0 < distance(nearest, (0.0, 1.0)) < 0.02
        assert nearest[1] > 1


class TestHalfFixedMaps:
    phi0 = diamond_map(DIAMOND)
    phi1 = diamond_map([(0, -1), (1, 0), (0, 2), (-1, 0)])

    def test_lower_half_is_fixed(self) -> None:
        for t in (0.25, 0.5, 0.75):
            middle = half_fixed_homotopy(self.phi0, self.phi1, t, nudge=False)
            for u in (0.0, 0.125, 0.25, 0.75, 0.875):
                assert middle.eval_u(u) == pytest.approx(self.phi0.eval_u(u))

    def test_top_moves(self) -> None:
        # gamma0 is already the shortest curve between the two ends
        middle = half_fixed_homotopy(self.phi0, self.phi1, 0.5, nudge=False)
        assert middle.eval_u(0.5) == pytest.approx((0, 1))
        late = half_fixed_homotopy(self.phi0, self.phi1, 0.75, nudge=False)
        assert late.eval_u(0.5) == pytest.approx((0, 2))

    def test_identical_maps(self) -> None:
        assert half_fixed_homotopy(self.phi0, self.phi0, 0.5) is self.phi0

    def test_maps_must_agree_below(self) -> None:
        moved = diamond_map([(0, -2), (1, 0), (0, 2), (-1, 0)])
        with pytest.raises(ValueError, match="differ on the fixed half"):
            half_fixed_homotopy(self.phi0, moved, 0.5)


class TestChainHomotopy:
    def test_splits_at_common_points(self) -> None:
        gamma0 = PolyLine(((0, 0), (1, 0), (2, 0)))
        gamma1 = PolyLine(((0, 0), (0.5, 1), (1, 0), (1.5, -1), (2, 0)))
        chain = ChainHomotopy(gamma0, gamma1, nudge=False)
        assert len(chain.pieces) == 2
        assert chain.curve(0.5).length == pytest.approx(2)
        assert chain.curve(1.0) is gamma1
        arc = chain.arc(0.75)
        assert arc.start == (0, 0) and arc.end == (2, 0)

    def test_requires_shared_ends(self) -> None:
        with pytest.raises(ValueError, match="share both endpoints"):
            ChainHomotopy(BEND, PolyLine(((0, 0), (2, 2), (3, 3))))


class TestCross:
    def test_certified(self) -> None:
        certify_cross(plus_cross())
        assert sorted(plus_cross().ends) == [(-1, 0), (0, -1), (0, 1), (1, 0)]

    def test_arm_must_leave_center(self) -> None:
        with pytest.raises(ValueError, match="does not leave the center"):
            Cross((0, 0), [PolyLine(((1, 1), (2, 2)))])

    def test_arms_meeting(self) -> None:
        cross = Cross(
            (0, 0), [PolyLine(((0, 0), (1, 1))), PolyLine(((0, 0), (1, 0), (0, 1)))]
        )
        with pytest.raises(ConstructionError, match="meet away from the center"):
            certify_cross(cross)

    def test_corridor(self) -> None:
        corridor = shapely.box(-0.5, -0.5, 0.5, 0.5)
        with pytest.raises(ConstructionError, match="leaves its corridor"):
            certify_cross(plus_cross(), corridor)

    @pytest.mark.parametrize("t", [0.13, 0.37, 0.71])
    def test_arms_along_corridor_boundary(self, t) -> None:
        a, b = (1.0, 0.3), (0.7, 1.1)
        corridor = shapely.Polygon([(0.0, 0.0), a, b, (0.1, 0.9)])
        center = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        arms = [PolyLine((center, a)), PolyLine((center, b)), PolyLine((center, (0.4, 0.5)))]
        certify_cross(Cross(center, arms), corridor)


class TestCrossDeformation:
    def test_center_moves_and_ends_stay(self) -> None:
        cross = plus_cross()
        target = (0.1, 0.05)
        deformation = CrossDeformation(cross, target)
        # arms on either side of the motion lead, the others trail
        assert sorted(deformation.trailing) == [2, 3]
        for t in (0.0, 0.3, 0.7, 1.0):
            moved = deformation.at(t)
            assert moved.ends == cross.ends
        assert deformation.at(1.0).center == pytest.approx(target)
        assert deformation.at(0.0).center == (0, 0)

    def test_cross_deform(self) -> None:
        moved = cross_deform(plus_cross(), (0.05, -0.1), None, 0.5)
        assert moved.center == pytest.approx((0.025, -0.05))
        certify_cross(moved)

    def test_constant(self) -> None:
        deformation = CrossDeformation(plus_cross(), (0.0, 0.0))
        assert deformation.constant
        assert deformation.at(0.5).center == (0, 0)

    def test_path_must_match(self) -> None:
        path = PolyLine(((0.0, 0.0), (0.2, 0.2)))
        with pytest.raises(ValueError, match="from the center to the target"):
            CrossDeformation(plus_cross(), (0.1, 0.1), path=path)


class TestBoundaryHomotopy:
    source = diamond_map(DIAMOND)
    target = diamond_map([(0, -2), (2, 0), (0, 2), (-2, 0)])

    def test_auto_picks_straight(self) -> None:
        homotopy = BoundaryHomotopy(self.source, self.target)
        assert homotopy.mode == HomotopyMode.STRAIGHT
        assert homotopy.at(0.0) is self.source
        assert homotopy.at(1.0) is self.target
        assert homotopy.at(0.5).eval_u(0.25) == pytest.approx((1.5, 0))

    @pytest.mark.parametrize("lam", [0.25, 0.5, 0.6, 0.75, 0.9])
    def test_migration_stays_simple(self, lam) -> None:
        homotopy = BoundaryHomotopy(
            self.source, self.target, HomotopyMode.MIGRATION, nudge=False
        )
        boundary = homotopy.at(lam)
        boundary.target_polygon()
        if lam == 0.5:
            # corners have migrated, sides not yet deformed
            for i, corner in enumerate(self.target.points):
                assert boundary.eval_u(i / 4) == pytest.approx(tuple(corner))

    def test_time_outside_interval(self) -> None:
        with pytest.raises(ValueError, match="outside"):
            BoundaryHomotopy(self.source, self.target).at(-0.1)


class TestGridLevelHomotopy:
    def test_children_map(self, identity_levels) -> None:
        fine = identity_levels[2]
        boundary = children_map(fine, 0, 0)
        assert boundary.target_polygon().area == pytest.approx(0.25)
        assert boundary.eval_u(0.0) == pytest.approx(fine.grid.vertex(0, 0))
        assert boundary.eval_u(0.25) == pytest.approx(fine.grid.vertex(2, 0))

    def test_straight_mode(self, identity_levels) -> None:
        homotopy = GridLevelHomotopy(identity_levels[1], identity_levels[2])
        assert homotopy.mode == HomotopyMode.STRAIGHT
        us = np.linspace(0, 1, 17, endpoint=False)
        for j in range(4):
            start = homotopy.cell_map(j, 0.0)
            assert_close(start.eval_many(us), homotopy.source(j).eval_many(us))
            assert homotopy.cell_map(j, 1.0) is homotopy.target(j)
            homotopy.cell_map(j, 0.5).target_polygon()

    def test_requires_consecutive_levels(self, identity_levels) -> None:
        with pytest.raises(ValueError, match="consecutive levels"):
            GridLevelHomotopy(identity_levels[2], identity_levels[1])

    @pytest.mark.slow
    @pytest.mark.parametrize("j", [0, 3])
    def test_migration_mode(self, identity_levels, j) -> None:
        coarse, fine = identity_levels[1], identity_levels[2]
        homotopy = GridLevelHomotopy(coarse, fine, HomotopyMode.MIGRATION, nudge=False)
        for lam in (0.25, 0.5, 0.75):
            homotopy.cell_map(j, lam)
        # corner images reach the fine grid at half time
        ix, iy = j % 2, j // 2
        start = homotopy.cell_map(j, 0.5).eval_u(0.0)
        assert start == pytest.approx(fine.grid.vertex(2 * ix, 2 * iy))
        # shared edges are computed once
        assert homotopy.side(("v", 1, 0)) is homotopy.side(("v", 1, 0))
        assert math.isfinite(homotopy.cell_map(j, 0.9).length())
