from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .defaults import GEODESIC_CACHE_RESOLUTION, INFLATION_FACTOR, LIPSCHITZ_SCALES
from .diamond import (
    PLBoundaryMap,
    SquareChart,
    height_of_u,
    in_diamond,
    left_u,
    right_u,
    segment_fraction,
)
from .dyadic_grid import Box
from .plgeom import (
    IntersectionKind,
    JordanPolygon,
    Location,
    Point2,
    PolyLine,
    distance,
    normalize_polygon,
    orient2d,
    point_on_segment,
    point_segment_distance,
    polylines_cross,
    segments_intersect,
)
from .triangulation import Triangulation

logger = logging.getLogger(__name__)

CurveModifier = Callable[[float, PolyLine], PolyLine]


class GeodesicDomain:
    """Triangulated simple polygon answering shortest path queries."""

    def __init__(self, polygon: JordanPolygon) -> None:
        self.polygon = polygon
        self.triangulation = Triangulation.of(polygon)
        self.dual = nx.Graph()
        self.dual.add_nodes_from(range(len(self.triangulation.triangles)))
        for t in range(len(self.triangulation.triangles)):
            for other, _ in self.triangulation.adjacent(t):
                self.dual.add_edge(t, other)

    def _containing(self, point: Point2) -> List[int]:
        pts = self.polygon.vertices
        result = []
        for t, (a, b, c) in enumerate(self.triangulation.triangles):
            if (
                orient2d(pts[a], pts[b], point) >= 0
                and orient2d(pts[b], pts[c], point) >= 0
                and orient2d(pts[c], pts[a], point) >= 0
            ):
                result.append(t)
        return result

    def channel(self, a: Point2, b: Point2) -> List[int]:
        """Triangles crossed by the dual tree path between the closest pair."""
        starts = self._containing(a)
        ends = self._containing(b)
        if not starts or not ends:
            missing = a if not starts else b
            msg = f"Endpoint {missing} is outside the closed polygon"
            raise ValueError(msg)
        hops, first, last = min(
            (nx.shortest_path_length(self.dual, s, e), s, e)
            for s in starts
            for e in ends
        )
        logger.debug(f"Channel of {hops + 1} triangles")
        return nx.shortest_path(self.dual, first, last)

    def portals(self, channel: Sequence[int]) -> List[Tuple[Point2, Point2]]:
        """``(left, right)`` portal pairs as seen walking along the channel."""
        pts = self.polygon.vertices
        result = []
        for t, nxt in zip(channel, channel[1:]):
            for other, (u, v) in self.triangulation.adjacent(t):
                if other == nxt:
                    result.append((pts[v], pts[u]))
                    break
        return result

    def shortest_path(self, a: Point2, b: Point2) -> PolyLine:
        a = (float(a[0]), float(a[1]))
        b = (float(b[0]), float(b[1]))
        inner_a, inner_b = self.polygon.snap(a), self.polygon.snap(b)
        if inner_a == inner_b:
            return _with_ends(PolyLine((inner_a,)), a, b)
        channel = self.channel(inner_a, inner_b)
        portals = [(inner_a, inner_a)] + self.portals(channel) + [(inner_b, inner_b)]
        path = PolyLine.from_points(_string_pull(portals)).without_collinear()
        return _with_ends(path, a, b)


def _with_ends(path: PolyLine, a: Point2, b: Point2) -> PolyLine:
    # paths run between snapped points, the callers expect their own ends back
    if len(path) == 1:
        return PolyLine.from_points([a, b])
    vertices = list(path.vertices)
    vertices[0], vertices[-1] = a, b
    return PolyLine.from_points(vertices)


def _collinear_closer(apex: Point2, ray_end: Point2, p: Point2) -> bool:
    # p on the ray apex->ray_end and no farther than ray_end
    if orient2d(apex, ray_end, p) != 0:
        return False
    dx, dy = ray_end[0] - apex[0], ray_end[1] - apex[1]
    px, py = p[0] - apex[0], p[1] - apex[1]
    dot = dx * px + dy * py
    return 0 <= dot <= dx * dx + dy * dy


def _string_pull(portals: List[Tuple[Point2, Point2]]) -> List[Point2]:
    """Funnel algorithm over ``(left, right)`` portals."""
    apex = portals[0][0]
    left, right = portals[0]
    apex_index = left_index = right_index = 0
    path = [apex]
    i = 1
    while i < len(portals):
        new_left, new_right = portals[i]

        # tighten the right side
        if orient2d(apex, right, new_right) >= 0:
            if (
                apex == right
                or orient2d(apex, left, new_right) < 0
                or _collinear_closer(apex, left, new_right)
            ):
                right = new_right
                right_index = i
            else:
                path.append(left)
                apex = left
                apex_index = left_index
                left = right = apex
                left_index = right_index = apex_index
                i = apex_index + 1
                continue

        # tighten the left side
        if orient2d(apex, left, new_left) <= 0:
            if (
                apex == left
                or orient2d(apex, right, new_left) > 0
                or _collinear_closer(apex, right, new_left)
            ):
                left = new_left
                left_index = i
            else:
                path.append(right)
                apex = right
                apex_index = right_index
                left = right = apex
                left_index = right_index = apex_index
                i = apex_index + 1
                continue
        i += 1

    end = portals[-1][0]
    if path[-1] != end:
        path.append(end)
    return path


_domains: Dict[Tuple[Point2, ...], GeodesicDomain] = {}
_domains_lock = threading.Lock()


def geodesic_domain(poly: JordanPolygon) -> GeodesicDomain:
    with _domains_lock:
        domain = _domains.get(poly.vertices)
        if domain is None:
            if len(_domains) > 256:
                _domains.clear()
            domain = GeodesicDomain(poly)
            _domains[poly.vertices] = domain
    return domain


def shortest_path(poly: JordanPolygon, a: Point2, b: Point2) -> PolyLine:
    """Shortest path between two points of the closed polygon."""
    return geodesic_domain(poly).shortest_path(a, b)


def _visible(poly: JordanPolygon, p: Point2, q: Point2) -> bool:
    if p == q:
        return True
    edges = poly.edges()
    for edge in edges:
        kind, _ = segments_intersect((p, q), edge)
        if kind == IntersectionKind.INTERIOR_CROSS:
            return False
    # split pq at polygon vertices on it; every piece lies wholly in or out
    stops = [p, q] + [v for v in poly.vertices if point_on_segment(v, p, q)]
    stops = sorted(set(stops), key=lambda v: distance(p, v))
    for a, b in zip(stops, stops[1:]):
        if any(point_on_segment(a, *e) and point_on_segment(b, *e) for e in edges):
            continue
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if poly.locate(mid) == Location.OUTSIDE:
            return False
    return True


def shortest_path_oracle(poly: JordanPolygon, a: Point2, b: Point2) -> PolyLine:
    """Visibility graph geodesic, quadratic, kept as an independent check."""
    a = (float(a[0]), float(a[1]))
    b = (float(b[0]), float(b[1]))
    inner_a, inner_b = poly.snap(a), poly.snap(b)
    if inner_a == inner_b:
        return _with_ends(PolyLine((inner_a,)), a, b)
    nodes = list(dict.fromkeys([inner_a, inner_b, *poly.vertices]))
    graph = nx.Graph()
    graph.add_nodes_from(range(len(nodes)))
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if _visible(poly, nodes[i], nodes[j]):
                graph.add_edge(i, j, weight=distance(nodes[i], nodes[j]))
    route = nx.dijkstra_path(graph, 0, 1, weight="weight")
    return _with_ends(
        PolyLine.from_points(nodes[i] for i in route).without_collinear(), a, b
    )


def inflate_pinched(
    points: Sequence[Point2], factor: float = INFLATION_FACTOR
) -> JordanPolygon:
    """Polygon from a possibly pinched closed curve.

    Vertices touching a non-incident side are pushed off that side by
    ``factor * diameter`` along its inner normal.
    """
    pts = [(float(x), float(y)) for x, y in points]
    try:
        return normalize_polygon(pts)
    except ValueError:
        pass
    poly = normalize_polygon(pts, check_simple=False)
    eps = factor * poly.diameter()
    vertices = list(poly.vertices)
    n = len(vertices)
    moved = 0
    for i, v in enumerate(vertices):
        for j in range(n):
            if j in (i, (i - 1) % n):
                continue
            a, b = poly.vertices[j], poly.vertices[(j + 1) % n]
            if point_segment_distance(v, a, b) <= eps:
                # interior lies left of every counterclockwise side
                length = distance(a, b)
                nx_, ny_ = (a[1] - b[1]) / length, (b[0] - a[0]) / length
                vertices[i] = (v[0] + eps * nx_, v[1] + eps * ny_)
                moved += 1
                break
    logger.debug(f"Inflated {moved} pinching vertices by {eps:.3g}")
    return normalize_polygon(vertices)


class ShortestCurveExtension:
    """Extension of a boundary map of the diamond by shortest curves.

    Every horizontal segment ``l_s`` goes at constant speed onto the shortest
    curve ``L_s`` joining the images of its ends.
    """

    def __init__(
        self,
        boundary: PLBoundaryMap,
        modifier: Optional[CurveModifier] = None,
    ) -> None:
        self.boundary = boundary
        try:
            self.polygon = boundary.target_polygon()
        except ValueError:
            self.polygon = inflate_pinched(list(map(tuple, boundary.points)))
        self.domain = geodesic_domain(self.polygon)
        self.modifier = modifier
        self._cache: Dict[float, PolyLine] = {}
        self._lock = threading.Lock()

    def endpoints(self, s: float) -> Tuple[Point2, Point2]:
        return self.boundary.eval_u(left_u(s)), self.boundary.eval_u(right_u(s))

    def raw_curve(self, s: float) -> PolyLine:
        cacheable = (s / GEODESIC_CACHE_RESOLUTION).is_integer()
        if cacheable:
            cached = self._cache.get(s)
            if cached is not None:
                return cached
        a, b = self.endpoints(s)
        curve = self.domain.shortest_path(a, b)
        if cacheable:
            with self._lock:
                curve = self._cache.setdefault(s, curve)
        return curve

    def curve(self, s: float) -> PolyLine:
        if not -1 <= s <= 1:
            msg = f"Height {s} outside [-1, 1]"
            raise ValueError(msg)
        curve = self.raw_curve(s)
        if self.modifier is not None:
            curve = self.modifier(s, curve)
        return curve

    def extend(self, z: Point2) -> Point2:
        if not in_diamond(z):
            msg = f"{z} is outside the diamond"
            raise ValueError(msg)
        s, w = segment_fraction(z)
        if abs(s) >= 1:
            return self.boundary.eval_u(right_u(math.copysign(1.0, s)))
        if w == 0.0:
            return self.boundary.eval_u(left_u(s))
        if w == 1.0:
            return self.boundary.eval_u(right_u(s))
        return self.curve(s).point_at_fraction(w)

    def extend_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.extend((float(x), float(y))) for x, y in points])

    # curve family interface used by the injectivizer
    @property
    def interval(self) -> Tuple[float, float]:
        return (-1.0, 1.0)

    def boundary_parameter(self, point: Point2) -> Optional[float]:
        u = self.boundary.parameter_of(point)
        return None if u is None else height_of_u(u)

    def lower_region(self, s: float) -> np.ndarray:
        """Closed ring of the part of the target below ``L_s``."""
        curve = self.raw_curve(s)
        arc = self.boundary.arc(left_u(s), right_u(s) + 1.0)
        ring = list(curve.vertices) + [tuple(p) for p in arc.points[::-1][1:-1]]
        return np.asarray(ring, dtype=float).reshape(-1, 2)


def square_extension(
    chart: SquareChart, extension: ShortestCurveExtension
) -> Callable[[Point2], Point2]:
    """Shortest curve extension pulled back to the square of ``chart``."""

    def evaluate(point: Point2) -> Point2:
        return extension.extend(chart.to_diamond(point))

    return evaluate


Region = Union[Box, JordanPolygon]
PlanarMap = Callable[[Point2], Sequence[float]]


def _sampler(region: Region, rng: np.random.Generator) -> Callable[[int], np.ndarray]:
    if isinstance(region, JordanPolygon):
        pts = np.asarray(region.vertices)
        lo, hi = pts.min(axis=0), pts.max(axis=0)

        def draw(n: int) -> np.ndarray:
            out: List[np.ndarray] = []
            while sum(len(o) for o in out) < n:
                cand = lo + rng.random((2 * n, 2)) * (hi - lo)
                keep = [c for c in cand if region.contains((c[0], c[1]))]
                out.append(np.asarray(keep).reshape(-1, 2))
            return np.concatenate(out)[:n]

        return draw
    (x0, y0), (x1, y1) = region

    def draw_box(n: int) -> np.ndarray:
        return np.array([x0, y0]) + rng.random((n, 2)) * np.array([x1 - x0, y1 - y0])

    return draw_box


def _in_region(region: Region, p: np.ndarray) -> bool:
    if isinstance(region, JordanPolygon):
        return region.contains((float(p[0]), float(p[1])))
    (x0, y0), (x1, y1) = region
    return bool(x0 <= p[0] <= x1 and y0 <= p[1] <= y1)


def lipschitz_estimate(
    f: PlanarMap,
    region: Region,
    n: int = 1000,
    seed: int = 42,
    scales: int = LIPSCHITZ_SCALES,
) -> float:
    """Largest difference quotient over random pairs at dyadic scales."""
    if n < 1:
        msg = f"Sample count must be positive, got {n}"
        raise ValueError(msg)
    rng = np.random.default_rng(seed)
    draw = _sampler(region, rng)
    best = 0.0
    bases = draw(n)
    exponents = rng.integers(1, scales + 1, size=n)
    angles = rng.random(n) * 2 * np.pi
    for x, m, theta in zip(bases, exponents, angles):
        r = 2.0 ** -int(m)
        y = x + r * np.array([math.cos(theta), math.sin(theta)])
        if not _in_region(region, y):
            continue
        fx = np.asarray(f((float(x[0]), float(x[1]))), dtype=float)
        fy = np.asarray(f((float(y[0]), float(y[1]))), dtype=float)
        best = max(best, float(np.linalg.norm(fx - fy)) / float(np.linalg.norm(x - y)))
    return best


def family_time_lipschitz(
    family: Callable[[float], PlanarMap],
    n: int = 200,
    seed: int = 42,
    region: Optional[Region] = None,
) -> float:
    """Largest ``|H_t1(z) - H_t2(z)| / |t1 - t2|`` over sampled ``z`` and times."""
    rng = np.random.default_rng(seed)
    diamond = JordanPolygon(((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)))
    draw = _sampler(region if region is not None else diamond, rng)
    points = draw(n)
    best = 0.0
    maps: Dict[float, PlanarMap] = {}

    def at(t: float) -> PlanarMap:
        if t not in maps:
            maps[t] = family(t)
        return maps[t]

    times = np.linspace(0.0, 1.0, 17)
    for z in points:
        i, j = sorted(rng.choice(len(times), size=2, replace=False))
        t1, t2 = float(times[i]), float(times[j])
        zz = (float(z[0]), float(z[1]))
        a = np.asarray(at(t1)(zz), dtype=float)
        b = np.asarray(at(t2)(zz), dtype=float)
        best = max(best, float(np.linalg.norm(a - b)) / (t2 - t1))
    return best


@dataclass
class FoliationCheck:
    levels: List[float]
    crossings: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.crossings


def check_foliation(extension: ShortestCurveExtension, count: int = 64) -> FoliationCheck:
    """Pairwise non-crossing of the curves ``L_s`` at ``count`` interior heights."""
    levels = [-1 + 2 * (i + 1) / (count + 1) for i in range(count)]
    curves = [extension.curve(s) for s in levels]
    result = FoliationCheck(levels)
    for i in range(count):
        for j in range(i + 1, count):
            if polylines_cross(curves[i], curves[j]):
                result.crossings.append((levels[i], levels[j]))
    return result
