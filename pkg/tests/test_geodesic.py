import logging
import math

import numpy as np
import pytest

from sobext.diamond import PLBoundaryMap, SquareChart
from sobext.geodesic import (
    GeodesicDomain,
    ShortestCurveExtension,
    check_foliation,
    family_time_lipschitz,
    inflate_pinched,
    lipschitz_estimate,
    shortest_path,
    shortest_path_oracle,
    square_extension,
)
from sobext.plgeom import JordanPolygon, normalize_polygon, polygon_signed_area
from sobext.sobext_runner import star_polygon

from .conftest import COMB, L_SHAPE, assert_close

logger = logging.getLogger(__name__)

DIAMOND = JordanPolygon(((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)))

# two lobes touching at (2, 0), a limit of Jordan curves
PINCHED = [(0, 0), (4, 0), (4, 2), (3, 2), (2, 0), (1, 2), (0, 2)]


def _inside(rng: np.random.Generator, polygon: JordanPolygon) -> tuple:
    while True:
        p = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        if polygon.contains(p):
            return p


@pytest.fixture
def l_shape() -> JordanPolygon:
    return JordanPolygon(tuple(L_SHAPE))


@pytest.fixture
def diamond_identity() -> ShortestCurveExtension:
    return ShortestCurveExtension(PLBoundaryMap.from_function(lambda z: z, samples=16))


class TestShortestPath:
    def test_bends_at_reflex_vertex(self, l_shape) -> None:
        path = shortest_path(l_shape, (1.8, 0.5), (0.5, 1.8))
        assert path.vertices == ((1.8, 0.5), (1.0, 1.0), (0.5, 1.8))
        assert path.length == pytest.approx(2 * math.sqrt(0.89))

    def test_straight_when_visible(self, l_shape) -> None:
        path = shortest_path(l_shape, (0.2, 0.2), (1.8, 0.8))
        assert len(path) == 2

    def test_comb(self) -> None:
        comb = JordanPolygon(tuple(COMB))
        path = shortest_path(comb, (0.5, 2.5), (4.5, 2.5))
        assert path.vertices == ((0.5, 2.5), (1.0, 1.0), (4.0, 1.0), (4.5, 2.5))
        assert path.length == pytest.approx(3 + 2 * math.sqrt(2.5))

    def test_boundary_endpoints(self, l_shape) -> None:
        # passes through the reflex vertex, collinear pieces are merged
        path = shortest_path(l_shape, (2, 0), (0, 2))
        assert path.length == pytest.approx(2 * math.sqrt(2))
        assert path.start == (2, 0) and path.end == (0, 2)

    def test_coinciding_endpoints(self, l_shape) -> None:
        path = shortest_path(l_shape, (0.5, 0.5), (0.5, 0.5))
        assert len(path) == 1
        assert path.length == 0

    def test_endpoints_rounded_off_the_boundary(self) -> None:
        polygon = JordanPolygon(((0.0, 0.0), (1.0, 0.3), (0.7, 1.1), (0.1, 0.9)))
        a, b = (1.0, 0.3), (0.7, 1.1)
        for t in np.linspace(0.05, 0.95, 19):
            start = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            path = shortest_path(polygon, start, (0.05, 0.05))
            assert path.start == start and path.end == (0.05, 0.05)
            oracle = shortest_path_oracle(polygon, start, (0.05, 0.05))
            assert path.length == pytest.approx(oracle.length)

    def test_outside_endpoint(self, l_shape) -> None:
        with pytest.raises(ValueError, match="outside the closed polygon"):
            shortest_path(l_shape, (0.5, 0.5), (1.5, 1.5))

    def test_channel_and_portals(self, l_shape) -> None:
        domain = GeodesicDomain(l_shape)
        channel = domain.channel((1.8, 0.5), (0.5, 1.8))
        assert len(domain.portals(channel)) == len(channel) - 1

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_oracle(self, seed) -> None:
        rng = np.random.default_rng(seed)
        polygon = normalize_polygon(star_polygon(rng, 20))
        inside = [_inside(rng, polygon) for _ in range(6)]
        for a, b in zip(inside, inside[1:]):
            funnel = shortest_path(polygon, a, b)
            oracle = shortest_path_oracle(polygon, a, b)
            assert funnel.length == pytest.approx(oracle.length, abs=1e-9)

    @pytest.mark.slow
    def test_agrees_with_oracle_on_random_polygons(self) -> None:
        rng = np.random.default_rng(2024)
        compared = 0
        while compared < 1000:
            try:
                polygon = normalize_polygon(star_polygon(rng, int(rng.integers(3, 31))))
            except ValueError:
                continue
            a, b = (_inside(rng, polygon) for _ in range(2))
            funnel = shortest_path(polygon, a, b)
            oracle = shortest_path_oracle(polygon, a, b)
            assert funnel.length == pytest.approx(oracle.length, abs=1e-9)
            assert funnel.vertices == oracle.vertices
            compared += 1

    def test_oracle_on_comb(self) -> None:
        comb = JordanPolygon(tuple(COMB))
        oracle = shortest_path_oracle(comb, (0.5, 2.5), (4.5, 2.5))
        assert oracle.length == pytest.approx(3 + 2 * math.sqrt(2.5))


class TestInflation:
    def test_simple_polygon_unchanged(self) -> None:
        polygon = inflate_pinched(L_SHAPE)
        assert polygon.vertices == JordanPolygon(tuple(L_SHAPE)).vertices

    def test_pinched_polygon(self) -> None:
        with pytest.raises(ValueError, match="not simple"):
            normalize_polygon(PINCHED)
        polygon = inflate_pinched(PINCHED)
        assert polygon.is_simple()
        assert polygon.area == pytest.approx(6, abs=1e-6)
        # the pinching vertex moved off the bottom side, into the domain
        moved = [v for v in polygon.vertices if v[0] == 2.0]
        assert len(moved) == 1 and 0 < moved[0][1] < 1e-6

    def test_paths_cross_the_pinch(self) -> None:
        polygon = inflate_pinched(PINCHED)
        # the straight segment would leave through the notch above the pinch
        path = shortest_path(polygon, (0.5, 0.5), (3.5, 0.5))
        assert path.length == pytest.approx(2 * math.sqrt(2.5), abs=1e-6)

    def test_extension_of_pinched_image(self) -> None:
        extension = ShortestCurveExtension(PLBoundaryMap.from_polygon(PINCHED))
        assert extension.polygon.is_simple()
        assert extension.curve(0.0).length > 0


class TestShortestCurveExtension:
    def test_identity_on_diamond(self, diamond_identity, rng) -> None:
        points = rng.uniform(-0.5, 0.5, (40, 2))
        assert_close(diamond_identity.extend_many(points), points, 1e-12)

    def test_boundary_values(self, diamond_identity) -> None:
        assert diamond_identity.extend((0.0, 1.0)) == pytest.approx((0, 1))
        assert diamond_identity.extend((0.0, -1.0)) == pytest.approx((0, -1))
        assert diamond_identity.extend((-0.5, 0.5)) == pytest.approx((-0.5, 0.5))

    def test_invalid_arguments(self, diamond_identity) -> None:
        with pytest.raises(ValueError, match="outside the diamond"):
            diamond_identity.extend((1.0, 1.0))
        with pytest.raises(ValueError, match=r"outside \[-1, 1\]"):
            diamond_identity.curve(1.5)

    def test_curves_are_cached(self, diamond_identity) -> None:
        assert diamond_identity.raw_curve(0.5) is diamond_identity.raw_curve(0.5)

    def test_l_shaped_target(self) -> None:
        extension = ShortestCurveExtension(PLBoundaryMap.from_polygon(L_SHAPE))
        assert extension.polygon.contains(extension.extend((0.0, 0.0)))
        assert check_foliation(extension, count=24).ok
        assert extension.boundary_parameter((2.0, 0.0)) == pytest.approx(0.0)
        assert extension.boundary_parameter((0.5, 0.5)) is None

    def test_foliation_of_comb(self) -> None:
        extension = ShortestCurveExtension(PLBoundaryMap.from_polygon(COMB))
        check = check_foliation(extension, count=32)
        assert check.ok, check.crossings

    def test_lower_region(self, diamond_identity) -> None:
        ring = diamond_identity.lower_region(0.0)
        assert abs(polygon_signed_area(ring)) == pytest.approx(1.0)

    def test_square_pullback(self, diamond_identity) -> None:
        chart = SquareChart((0.0, 0.0), 1.0)
        evaluate = square_extension(chart, diamond_identity)
        assert evaluate((0.0, 0.0)) == pytest.approx((0, -1))
        assert evaluate((0.5, 0.5)) == pytest.approx((0, 0))


class TestLipschitz:
    def test_linear_maps(self) -> None:
        box = ((0.0, 0.0), (1.0, 1.0))
        assert lipschitz_estimate(lambda z: z, box, n=200) == pytest.approx(1.0)
        double = lipschitz_estimate(lambda z: (2 * z[0], 2 * z[1]), box, n=200)
        assert double == pytest.approx(2.0)

    def test_polygon_region(self, l_shape) -> None:
        value = lipschitz_estimate(lambda z: (3 * z[0], z[1]), l_shape, n=300)
        assert 1.0 <= value <= 3.0 + 1e-9

    @pytest.mark.slow
    def test_extension_constant_is_stable(self) -> None:
        rng = np.random.default_rng(11)
        ratios: dict = {250: [], 500: []}
        for _ in range(20):
            boundary = PLBoundaryMap.from_polygon(star_polygon(rng, int(rng.integers(4, 13))))
            extension = ShortestCurveExtension(boundary)
            speed = boundary.max_speed()
            for n, values in ratios.items():
                values.append(lipschitz_estimate(extension.extend, DIAMOND, n=n) / speed)
        assert all(math.isfinite(r) and r > 0 for r in ratios[500])
        coarse, fine = max(ratios[250]), max(ratios[500])
        logger.info(f"Extension Lipschitz constant {coarse:.4g} and {fine:.4g}")
        assert fine == pytest.approx(coarse, rel=0.1)

    def test_requires_samples(self) -> None:
        with pytest.raises(ValueError, match="Sample count must be positive"):
            lipschitz_estimate(lambda z: z, ((0.0, 0.0), (1.0, 1.0)), n=0)

    def test_family_time_lipschitz(self) -> None:
        def family(t):
            return lambda z: (z[0] + 0.5 * t, z[1])

        assert family_time_lipschitz(family, n=50) == pytest.approx(0.5)
