import json
import logging
import math

import numpy as np
import pytest

from sobext.diamond import PLBoundaryMap
from sobext.geodesic import ShortestCurveExtension
from sobext.injectivizer import (
    MonotoneReparam,
    Schedule,
    VertexSpread,
    blend_levels,
    f_star,
    facet_determinants,
    max_displacement,
    modify_curves,
    normal_segments,
    rescale_interval,
    select_blend_time,
    separation_distance,
    square_mesh,
    strict_value,
    time_lower_bound,
    verify_injective,
)
from sobext.plgeom import JordanPolygon
from sobext.sobext_error import ConstructionError

from .conftest import L_SHAPE, UNIT_SQUARE

logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def l_extension() -> ShortestCurveExtension:
    return ShortestCurveExtension(PLBoundaryMap.from_polygon(L_SHAPE))


@pytest.fixture(scope="module")
def l_modified(l_extension):
    return modify_curves(l_extension)


class TestNormalSegments:
    def test_unit_square(self) -> None:
        poly = JordanPolygon(tuple(UNIT_SQUARE))
        segments = normal_segments(poly)
        assert len(segments) == 4
        assert all(s.length == pytest.approx(1 / 30) for s in segments)
        corner = next(s for s in segments if s.vertex == (0, 0))
        assert corner.tip == pytest.approx((1 / 30 / math.sqrt(2),) * 2)
        assert corner.at(0.5) == pytest.approx((1 / 60 / math.sqrt(2),) * 2)

    def test_reflex_vertex_points_inside(self) -> None:
        poly = JordanPolygon(tuple(L_SHAPE))
        reflex = next(s for s in normal_segments(poly) if s.vertex == (1, 1))
        assert reflex.tip[0] < 1 and reflex.tip[1] < 1
        assert poly.contains(reflex.tip)

    def test_zero_dial(self) -> None:
        poly = JordanPolygon(tuple(UNIT_SQUARE))
        assert all(s.length == 0 for s in normal_segments(poly, epsilon=0.0))

    @pytest.mark.parametrize("epsilon", [-0.1, 1.0])
    def test_invalid_dial(self, epsilon) -> None:
        poly = JordanPolygon(tuple(UNIT_SQUARE))
        with pytest.raises(ValueError, match="Segment dial"):
            normal_segments(poly, epsilon)

    def test_separation_distance(self) -> None:
        triangle = JordanPolygon(((0, 0), (1, 0), (0, 1)))
        assert separation_distance(triangle) == pytest.approx(1 / math.sqrt(2))
        assert separation_distance(JordanPolygon(tuple(L_SHAPE))) == pytest.approx(1)


class TestStrictReparam:
    def test_increasing(self) -> None:
        f = MonotoneReparam([0.0, 0.5, 1.0], [0.0, 0.0, 1.0])
        assert f.increasing and f.flat_length == 0.5
        strict = f_star(f)
        assert strict(0.0) == 0.0
        assert strict(0.25) == pytest.approx(0.25)
        assert strict(0.75) == pytest.approx(0.75)
        assert strict(1.0) == pytest.approx(1.0)
        values = [strict(x) for x in np.linspace(0, 1, 41)]
        assert np.all(np.diff(values) > 0)

    def test_decreasing(self) -> None:
        f = MonotoneReparam([0.0, 0.5, 1.0], [1.0, 0.0, 0.0])
        strict = f_star(f)
        assert strict.mirrored
        assert strict(0.75) == pytest.approx(0.25)
        values = [strict(x) for x in np.linspace(0, 1, 41)]
        assert np.all(np.diff(values) < 0)

    def test_without_flat_part(self) -> None:
        f = MonotoneReparam([0.0, 1.0], [0.0, 1.0])
        assert f.flat_length == 0.0
        assert strict_value(0.0, 0.0, 0.0) == 0.0
        assert f_star(f)(0.5) == pytest.approx(0.75)

    def test_rejects_non_monotone(self) -> None:
        f = MonotoneReparam([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
        with pytest.raises(ValueError, match="needs a monotone function"):
            f_star(f)

    def test_rejects_bad_knots(self) -> None:
        with pytest.raises(ValueError, match="strictly increasing"):
            MonotoneReparam([0.0, 0.0, 1.0], [0.0, 0.5, 1.0])
        with pytest.raises(ValueError, match="matching knots"):
            MonotoneReparam([0.0], [0.0])


def test_vertex_spread_fraction() -> None:
    poly = JordanPolygon(tuple(UNIT_SQUARE))
    spread = VertexSpread(normal_segments(poly)[0], ends_at=1.0, through_tip=0.0, flat=0.5)
    assert spread.fraction(0.25) == pytest.approx(0.75)
    assert spread.fraction(1.5) is None
    assert spread.fraction(1.0) is None


class TestModifiedFamily:
    def test_spread_at_reflex_vertex(self, l_modified) -> None:
        assert len(l_modified.spreads) == 1
        spread = l_modified.spreads[0]
        assert spread.segment.vertex == (1, 1)
        assert spread.ends_at == pytest.approx(1.0)
        assert spread.through_tip < 0 < spread.flat < 1

    def test_curves_leave_the_vertex(self, l_extension, l_modified) -> None:
        for s in (0.1, 0.5, 0.9):
            assert (1.0, 1.0) in l_extension.raw_curve(s).vertices
            curve = l_modified.curve(s)
            assert (1.0, 1.0) not in curve.vertices
            assert curve.start == l_extension.raw_curve(s).start

    def test_modified_curves_are_disjoint(self, l_extension, l_modified) -> None:
        s_values = np.linspace(-0.9, 0.9, 37)
        raw = verify_injective(l_extension.raw_curve, l_extension.polygon, s_values)
        assert not raw.ok
        report = verify_injective(l_modified.curve, l_extension.polygon, s_values)
        assert report.ok, report.to_json()
        assert report.checked_curves == 37
        assert report.checked_pairs == 200
        assert json.loads(report.to_json())["ok"]

    def test_displacement_is_small(self, l_modified) -> None:
        shift = max_displacement(l_modified, [0.1, 0.5, 0.9])
        assert 0 < shift <= 1 / 30 + 1e-9

    def test_convex_target_needs_no_spread(self) -> None:
        identity = ShortestCurveExtension(PLBoundaryMap.from_function(lambda z: z, 16))
        assert modify_curves(identity).spreads == []


class TestSchedule:
    def test_constant_schedule(self) -> None:
        schedule = Schedule.sample(lambda t: 0.5, lambda t: 2.0, exponent=3)
        assert len(schedule.times) == 9
        assert schedule.epsilon(0.3) == pytest.approx(0.05)
        assert schedule.product(0.3) == pytest.approx(0.1)
        assert schedule.max_jump() == 0

    def test_gate_range(self) -> None:
        with pytest.raises(ValueError, match="Gate values"):
            Schedule([0.0, 1.0], [0.5, 1.0], [1.0, 1.0])

    def test_time_lower_bound(self) -> None:
        assert time_lower_bound(lambda t: 1 + t, (0.0, 1.0), 3) == pytest.approx(0.9)


class TestBlending:
    points, triangles = square_mesh(2)

    def test_square_mesh(self) -> None:
        assert self.points.shape == (9, 2)
        assert self.triangles.shape == (8, 3)
        dets = facet_determinants(self.points, self.triangles, self.points)
        assert np.allclose(dets, 1.0)

    def test_blend_scales(self) -> None:
        blended = blend_levels(self.points, self.triangles, self.points, 2 * self.points, 0.5)
        dets = facet_determinants(self.points, self.triangles, blended)
        assert np.allclose(dets, 2.25)

    def test_blend_folds(self) -> None:
        flipped = self.points * np.array([-1.0, 1.0])
        with pytest.raises(ConstructionError, match="folds facet"):
            blend_levels(self.points, self.triangles, self.points, flipped, 0.5)

    def test_rescale_interval(self) -> None:
        assert rescale_interval(0.5, 1.0, 0.5) == pytest.approx(0.75)
        assert rescale_interval(1.0, 1.0, 0.5) == pytest.approx(1.0)
        with pytest.raises(ValueError, match="nondegenerate"):
            rescale_interval(0.5, 0.5, 0.5)

    def test_select_blend_time(self) -> None:
        def values_at(t):
            return self.points * np.array([4 * t - 2.5, 1.0])

        # the half step flips orientation, the quarter step does not
        assert select_blend_time(values_at, self.points, self.triangles, 1.0) == 0.75

    def test_no_blend_time(self) -> None:
        def values_at(t):
            return self.points * np.array([1.0 if t == 1.0 else -1.0, 1.0])

        with pytest.raises(ConstructionError, match="No blend time"):
            select_blend_time(values_at, self.points, self.triangles, 1.0, max_power=4)
