"""Piecewise linear replacement of image grid curves.

Every grid edge is imaged once and shared by the two cells it bounds. Points
where the grid meets the grids of the neighbouring levels are marked and kept
as vertices through every simplification step.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist

from .boundary_maps import BoundaryMap
from .defaults import EDGE_SAMPLES, MAX_MARKED_POINTS, MIN_CLEARANCE
from .diamond import PLArc, PLBoundaryMap
from .dyadic_grid import GoodGrid
from .plgeom import (
    IntersectionKind,
    ParamCurve,
    Point2,
    PolyLine,
    _segment_distances,
    candidate_pairs,
    distance,
    point_on_segment,
    point_segment_distance,
    segments_intersect,
)
from .sobext_error import ConstructionError, InvariantViolation

logger = logging.getLogger(__name__)

EdgeKey = Tuple[str, int, int]
# marked point: domain fraction along the edge, domain point, level it comes from
Mark = Tuple[float, Point2, int]

VERTEX = 0
UNMARKED = -1


def _key(edge_key: EdgeKey) -> str:
    return f"{edge_key[0]}:{edge_key[1]}:{edge_key[2]}"


def _parse_key(text: str) -> EdgeKey:
    kind, ix, iy = text.split(":")
    return (kind, int(ix), int(iy))


@dataclass
class EdgeCurve:
    """Image of one grid edge, from its first to its second grid vertex.

    ``params`` are domain fractions along the edge; they are exact at marked
    vertices and at the two ends, the remaining ones are arc-length interpolated.
    ``origin`` is ``VERTEX`` at the ends, the level of the other grid at marked
    points and ``UNMARKED`` elsewhere.
    """

    key: EdgeKey
    points: np.ndarray
    params: np.ndarray
    origin: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.params = np.asarray(self.params, dtype=float)
        self.origin = np.asarray(self.origin, dtype=int)

    @property
    def marked(self) -> np.ndarray:
        return self.origin != UNMARKED

    @property
    def start(self) -> Point2:
        return (float(self.points[0, 0]), float(self.points[0, 1]))

    @property
    def end(self) -> Point2:
        return (float(self.points[-1, 0]), float(self.points[-1, 1]))

    def polyline(self) -> PolyLine:
        return PolyLine.from_points(map(tuple, self.points))

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def segments(self) -> List[Tuple[Point2, Point2]]:
        return self.polyline().segments()

    def with_points(self, points: np.ndarray, origin: np.ndarray, marked_params):
        """New curve over ``points``, params interpolated between marked ones."""
        params = _interpolate_params(points, origin, marked_params)
        return EdgeCurve(self.key, points, params, origin)

    def arc(self) -> PLArc:
        return PLArc(self.params, self.points)

    def to_dict(self) -> dict:
        return {
            "key": _key(self.key),
            "points": self.points.tolist(),
            "params": self.params.tolist(),
            "origin": self.origin.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> EdgeCurve:
        return cls(
            _parse_key(data["key"]),
            np.asarray(data["points"]),
            np.asarray(data["params"]),
            np.asarray(data["origin"]),
        )


def _interpolate_params(
    points: np.ndarray, origin: np.ndarray, marked_params: Sequence[float]
) -> np.ndarray:
    cumulative = np.concatenate(
        [[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))]
    )
    anchors = np.flatnonzero(origin != UNMARKED)
    if len(anchors) != len(marked_params):
        msg = "Marked parameter count does not match the marked vertices"
        raise ValueError(msg)
    return np.interp(cumulative, cumulative[anchors], np.asarray(marked_params))


@dataclass
class ImageGrid:
    level: int
    grid: GoodGrid
    edges: Dict[EdgeKey, EdgeCurve]

    def vertex_image(self, ix: int, iy: int) -> Point2:
        if iy < self.grid.size + 1 and ix < self.grid.size:
            return self.edges[("h", ix, iy)].start
        if ix > 0:
            return self.edges[("h", ix - 1, iy)].end
        return self.edges[("v", ix, iy - 1)].end

    def vertex_images(self) -> np.ndarray:
        n = self.grid.size
        return np.array(
            [self.vertex_image(ix, iy) for iy in range(n + 1) for ix in range(n + 1)]
        )

    def marked_images(self) -> np.ndarray:
        pts = [
            e.points[i]
            for e in self.edges.values()
            for i in np.flatnonzero(e.origin > 0)
        ]
        return np.asarray(pts, dtype=float).reshape(-1, 2)


def cross_level_marks(
    grid_a: GoodGrid, grid_b: GoodGrid
) -> Tuple[Dict[EdgeKey, List[Mark]], Dict[EdgeKey, List[Mark]]]:
    """Domain intersection points of the edges of two grids, per edge of each."""
    edges_a, edges_b = grid_a.edges(), grid_b.edges()
    segs_a = [s for _, s in edges_a]
    segs_b = [s for _, s in edges_b]
    marks_a: Dict[EdgeKey, List[Mark]] = {}
    marks_b: Dict[EdgeKey, List[Mark]] = {}
    for i, j in candidate_pairs(segs_a, segs_b):
        kind, point = segments_intersect(segs_a[i], segs_b[j])
        if kind == IntersectionKind.DISJOINT or point is None:
            continue
        if kind == IntersectionKind.OVERLAP:
            msg = f"Grid edges {edges_a[i][0]} and {edges_b[j][0]} overlap"
            raise InvariantViolation(msg, {"edges": [edges_a[i][0], edges_b[j][0]]})
        for (key, seg), marks, other in (
            (edges_a[i], marks_a, grid_b.level),
            (edges_b[j], marks_b, grid_a.level),
        ):
            a, b = seg
            w = distance(a, point) / distance(a, b)
            if 0 < w < 1:
                marks.setdefault(key, []).append((w, point, other))
    return marks_a, marks_b


def _sample_edge(
    phi: BoundaryMap,
    key: EdgeKey,
    segment: Tuple[Point2, Point2],
    marks: Sequence[Mark],
    samples: int,
    max_samples: int,
) -> EdgeCurve:
    a, b = np.asarray(segment[0]), np.asarray(segment[1])
    marks = sorted(marks)
    n = samples
    previous = None
    while True:
        base = np.linspace(0.0, 1.0, n + 1)
        mark_w = np.array([m[0] for m in marks])
        if len(mark_w):
            # drop grid samples colliding with marked fractions
            gap = np.abs(base[:, None] - mark_w[None, :]).min(axis=1)
            base = base[(gap > 1e-9) | (base == 0) | (base == 1)]
        ws = np.concatenate([base, mark_w])
        origin = np.concatenate(
            [np.full(len(base), UNMARKED), [m[2] for m in marks]]
        ).astype(int)
        domain = a + ws[:, None] * (b - a)
        if len(marks):
            domain[len(base) :] = np.asarray([m[1] for m in marks])
        order = np.argsort(ws, kind="stable")
        ws, origin, domain = ws[order], origin[order], domain[order]
        origin[0] = origin[-1] = VERTEX
        domain[0], domain[-1] = a, b
        images = phi.eval_many(domain)
        length = float(np.linalg.norm(np.diff(images, axis=0), axis=1).sum())
        if previous is not None and abs(length - previous) <= 1e-3 * max(length, 1e-300):
            break
        if n >= max_samples:
            break
        previous = length
        n *= 2
    return EdgeCurve(key, images, ws, origin)


def image_grid(
    phi: BoundaryMap,
    grid: GoodGrid,
    marks: Optional[Dict[EdgeKey, List[Mark]]] = None,
    samples: int = EDGE_SAMPLES,
    max_samples: int = 1024,
) -> ImageGrid:
    """Sample the image of every grid edge, refining until lengths settle."""
    marks = marks or {}
    edges = {
        key: _sample_edge(phi, key, seg, marks.get(key, []), samples, max_samples)
        for key, seg in grid.edges()
    }
    return ImageGrid(grid.level, grid, edges)


def _exit_point(center: np.ndarray, inside: np.ndarray, outside: np.ndarray, r: float):
    # point of [inside, outside] at distance r from center
    d = outside - inside
    f = inside - center
    a = float(d @ d)
    b = 2 * float(f @ d)
    c = float(f @ f) - r * r
    root = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return inside + min(1.0, max(0.0, root)) * d


def _trim_germ(edge: EdgeCurve, r: float) -> EdgeCurve:
    points, origin, params = edge.points, edge.origin, edge.params
    center = points[0]
    dist = np.linalg.norm(points - center, axis=1)
    inside = np.flatnonzero(dist < r)
    last = int(inside.max())
    if last == len(points) - 1:
        msg = f"Edge {edge.key} lies within the vertex ball of radius {r:.3g}"
        raise ConstructionError(msg)
    if np.any(origin[1 : last + 1] > 0):
        msg = f"Marked point of edge {edge.key} inside the vertex ball"
        raise ConstructionError(msg)
    germ = points[1 : last + 1]
    tip = points[last + 1]
    if len(germ) == 0 or all(
        point_segment_distance(tuple(p), tuple(center), tuple(tip)) <= 1e-12 for p in germ
    ):
        return edge
    exit_ = _exit_point(center, points[last], points[last + 1], r)
    span = np.linalg.norm(points[last + 1] - points[last])
    frac = np.linalg.norm(exit_ - points[last]) / span if span > 0 else 0.0
    w = params[last] + frac * (params[last + 1] - params[last])
    new_points = np.vstack([center, exit_, points[last + 1 :]])
    new_origin = np.concatenate([[VERTEX, UNMARKED], origin[last + 1 :]])
    new_params = np.concatenate([[params[0], w], params[last + 1 :]])
    if np.array_equal(exit_, points[last + 1]):
        new_points = np.delete(new_points, 1, axis=0)
        new_origin = np.delete(new_origin, 1)
        new_params = np.delete(new_params, 1)
    return EdgeCurve(edge.key, new_points, new_params, new_origin)


def _reverse(edge: EdgeCurve) -> EdgeCurve:
    return EdgeCurve(edge.key, edge.points[::-1], 1.0 - edge.params[::-1], edge.origin[::-1])


def linearize_vertices(grid: ImageGrid, radius: float) -> ImageGrid:
    """Replace the curve germs at every vertex image by straight segments."""
    vertices = grid.vertex_images()
    if len(vertices) > 1 and pdist(vertices).min() <= 4 * radius:
        msg = f"Vertex balls of radius {2 * radius:.3g} are not disjoint"
        raise ConstructionError(msg)
    marked = grid.marked_images()
    if len(marked):
        gaps = np.linalg.norm(marked[:, None, :] - vertices[None, :, :], axis=2)
        if gaps.min() <= radius:
            msg = f"Marked point within {radius:.3g} of a vertex image"
            raise ConstructionError(msg)
    edges = {}
    for key, edge in grid.edges.items():
        trimmed = _trim_germ(edge, radius)
        trimmed = _reverse(_trim_germ(_reverse(trimmed), radius))
        edges[key] = trimmed
    return ImageGrid(grid.level, grid.grid, edges)


def _chord_ok(points: np.ndarray, i: int, j: int, delta: float) -> bool:
    if j == i + 1:
        return True
    start, end = points[i : i + 1], points[j : j + 1]
    inner = points[i + 1 : j]
    if _segment_distances(start, end, inner).max() > delta:
        return False
    chord = start + np.linspace(0, 1, 9)[:, None] * (end - start)
    return bool(_segment_distances(points[i:j], points[i + 1 : j + 1], chord).min(axis=1).max() <= delta)


def _simplify_piece(points: np.ndarray, delta: float) -> List[int]:
    n = len(points)
    if _chord_ok(points, 0, n - 1, delta):
        return [0, n - 1]
    kept = [0]
    i = 0
    while i < n - 1:
        j = i + 1
        while j + 1 < n and _chord_ok(points, i, j + 1, delta):
            j += 1
        kept.append(j)
        i = j
    return kept


def _arrangement_path(points: np.ndarray) -> np.ndarray:
    """Shortest path from first to last point inside the union of the segments."""
    segments = [
        (tuple(points[i]), tuple(points[i + 1]))
        for i in range(len(points) - 1)
        if not np.array_equal(points[i], points[i + 1])
    ]
    stops: Dict[int, List[Point2]] = {i: [s[0], s[1]] for i, s in enumerate(segments)}
    for i, j in candidate_pairs(segments):
        kind, point = segments_intersect(segments[i], segments[j])
        if kind == IntersectionKind.DISJOINT or point is None:
            continue
        stops[i].append(point)
        stops[j].append(point)
    graph = nx.Graph()
    for i, seg in enumerate(segments):
        ordered = sorted(set(stops[i]), key=lambda p: distance(seg[0], p))
        for a, b in zip(ordered, ordered[1:]):
            graph.add_edge(a, b, weight=distance(a, b))
    route = nx.dijkstra_path(graph, segments[0][0], segments[-1][1], weight="weight")
    return np.asarray(route, dtype=float)


def _simplify_edge(edge: EdgeCurve, delta: float) -> EdgeCurve:
    anchors = np.flatnonzero(edge.marked)
    pieces: List[np.ndarray] = []
    new_origin: List[int] = [int(edge.origin[0])]
    for a, b in zip(anchors, anchors[1:]):
        chunk = edge.points[a : b + 1]
        kept = chunk[_simplify_piece(chunk, delta)]
        if len(kept) > 3 and not PolyLine.from_points(map(tuple, kept)).is_simple():
            kept = _arrangement_path(kept)
        pieces.append(kept[1:])
        new_origin.extend([UNMARKED] * (len(kept) - 2) + [int(edge.origin[b])])
    points = np.vstack([edge.points[:1]] + pieces)
    origin = np.asarray(new_origin)
    return edge.with_points(points, origin, edge.params[anchors])


def _level_violations(edges: Dict[EdgeKey, EdgeCurve]) -> List[Tuple[EdgeKey, EdgeKey]]:
    owners: List[EdgeKey] = []
    segments = []
    for key, edge in edges.items():
        for seg in edge.segments():
            owners.append(key)
            segments.append(seg)
    bad = []
    for i, j in candidate_pairs(segments):
        if owners[i] == owners[j]:
            continue
        kind, point = segments_intersect(segments[i], segments[j])
        if kind == IntersectionKind.DISJOINT:
            continue
        a, b = edges[owners[i]], edges[owners[j]]
        shared = {a.start, a.end} & {b.start, b.end}
        if kind == IntersectionKind.ENDPOINT_TOUCH and point in shared:
            continue
        bad.append((owners[i], owners[j]))
    return bad


@dataclass
class PLGrid:
    """Piecewise linear curves of one level with their marked vertices."""

    level: int
    grid: GoodGrid
    edges: Dict[EdgeKey, EdgeCurve]
    delta: float = 0.0
    radius: float = 0.0
    samples: Dict[EdgeKey, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.grid.size

    def cell_edges(self, j: int) -> List[Tuple[EdgeCurve, bool]]:
        """Bottom, right, top and left edges of cell j with a reversal flag."""
        n = self.size
        ix, iy = j % n, j // n
        return [
            (self.edges[("h", ix, iy)], False),
            (self.edges[("v", ix + 1, iy)], False),
            (self.edges[("h", ix, iy + 1)], True),
            (self.edges[("v", ix, iy)], True),
        ]

    def cell_arcs(self, j: int) -> List[PLArc]:
        return [e.arc().reversed() if rev else e.arc() for e, rev in self.cell_edges(j)]

    def cell_map(self, j: int) -> PLBoundaryMap:
        arcs = self.cell_arcs(j)
        return PLBoundaryMap.from_arcs(
            (i / 4, (i + 1) / 4, arc) for i, arc in enumerate(arcs)
        )

    def cell_curve(self, j: int) -> PolyLine:
        points: List[Point2] = []
        for arc in self.cell_arcs(j):
            points.extend(tuple(p) for p in arc.points[:-1])
        return PolyLine.from_points(points + [points[0]])

    def cell_length(self, j: int) -> float:
        return sum(e.length() for e, _ in self.cell_edges(j))

    def cell_marked(self, j: int) -> List[Tuple[Point2, float]]:
        """Marked vertices of the cell curve with their boundary parameter."""
        result: List[Tuple[Point2, float]] = []
        for i, (edge, rev) in enumerate(self.cell_edges(j)):
            for k in np.flatnonzero(edge.marked):
                w = edge.params[k]
                u = (i + ((1 - w) if rev else w)) / 4
                if u >= 1.0:
                    continue
                point = (float(edge.points[k, 0]), float(edge.points[k, 1]))
                if all(abs(u - v) > 1e-15 for _, v in result):
                    result.append((point, u))
        return sorted(result, key=lambda m: m[1])

    def cell_pieces(self, j: int) -> List[ParamCurve]:
        return parametrize(self.cell_curve(j), self.cell_marked(j))

    def all_segments(self) -> List[Tuple[Point2, Point2]]:
        return [s for e in self.edges.values() for s in e.segments()]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "delta": self.delta,
            "radius": self.radius,
            "grid": self.grid.to_dict(),
            "edges": [e.to_dict() for e in self.edges.values()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> PLGrid:
        edges = [EdgeCurve.from_dict(e) for e in data["edges"]]
        return cls(
            int(data["level"]),
            GoodGrid.from_dict(data["grid"]),
            {e.key: e for e in edges},
            float(data.get("delta", 0.0)),
            float(data.get("radius", 0.0)),
        )


def linearize_sides(
    grid: ImageGrid,
    delta: float,
    threads: Optional[int] = None,
    samples: Optional[Dict[EdgeKey, np.ndarray]] = None,
) -> PLGrid:
    """Inscribed polylines within ``delta`` of each side arc, halving on failure."""
    if not 0 < delta < 2.0**-grid.level:
        msg = f"Clearance {delta} must lie in (0, 2^-{grid.level})"
        raise ValueError(msg)
    current = delta
    while current >= MIN_CLEARANCE:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            simplified = list(
                executor.map(lambda e: _simplify_edge(e, current), grid.edges.values())
            )
        edges = {e.key: e for e in simplified}
        broken = [k for k, e in edges.items() if not e.polyline().is_simple()]
        crossings = _level_violations(edges) if not broken else []
        if not broken and not crossings:
            logger.info(f"Level {grid.level}: sides linearized with delta {current:.3g}")
            return PLGrid(
                grid.level,
                grid.grid,
                edges,
                delta=current,
                samples=samples if samples is not None else {},
            )
        logger.warning(
            f"Level {grid.level}: {len(broken) + len(crossings)} conflicts at "
            f"delta {current:.3g}, halving"
        )
        current /= 2
    msg = f"Level {grid.level}: side clearance dropped below {MIN_CLEARANCE}"
    raise ConstructionError(msg)


def preserve_cross_level(coarse: PLGrid, fine: PLGrid, tolerance: float = 1e-12) -> int:
    """Check that curves of consecutive levels meet exactly at shared marked points.

    Returns the number of intersection points found.
    """
    if fine.level != coarse.level + 1:
        msg = "Grids must be at consecutive levels"
        raise ValueError(msg)
    allowed = np.asarray(
        [
            e.points[i]
            for e in coarse.edges.values()
            for i in np.flatnonzero(e.origin == fine.level)
        ],
        dtype=float,
    ).reshape(-1, 2)
    segs_c, segs_f = coarse.all_segments(), fine.all_segments()
    found: List[Point2] = []
    for i, j in candidate_pairs(segs_c, segs_f):
        kind, point = segments_intersect(segs_c[i], segs_f[j])
        if kind == IntersectionKind.DISJOINT or point is None:
            continue
        gap = np.linalg.norm(allowed - np.asarray(point), axis=1).min() if len(allowed) else np.inf
        if kind == IntersectionKind.OVERLAP or gap > tolerance:
            msg = (
                f"Levels {coarse.level}/{fine.level}: unexpected intersection at "
                f"{point} between {segs_c[i]} and {segs_f[j]}"
            )
            raise InvariantViolation(
                msg, {"segments": [segs_c[i], segs_f[j]], "point": point}
            )
        if all(distance(point, q) > tolerance for q in found):
            found.append(point)
    if len(found) != len(allowed):
        msg = (
            f"Levels {coarse.level}/{fine.level}: {len(found)} intersections, "
            f"expected {len(allowed)}"
        )
        raise InvariantViolation(msg, {"found": len(found), "expected": len(allowed)})
    return len(found)


def parametrize(
    curve: PolyLine, marked: Sequence[Tuple[Point2, float]]
) -> List[ParamCurve]:
    """Constant speed pieces of a closed curve between consecutive marked points."""
    if len(marked) > MAX_MARKED_POINTS:
        msg = f"At most {MAX_MARKED_POINTS} marked points, got {len(marked)}"
        raise ValueError(msg)
    if len(marked) < 2:
        msg = "At least two marked points are needed"
        raise ValueError(msg)
    vertices = list(curve.vertices)
    if vertices[0] == vertices[-1]:
        vertices.pop()
    # insert marked points as vertices and record their positions
    ordered = sorted(marked, key=lambda m: m[1])
    ring: List[Point2] = list(vertices)
    positions: List[int] = []
    for point, _ in ordered:
        position = _locate_on_ring(ring, point)
        if position is None:
            msg = f"Marked point {point} is not on the curve"
            raise ValueError(msg)
        index, is_vertex = position
        if not is_vertex:
            ring.insert(index + 1, point)
            positions = [p + 1 if p > index else p for p in positions]
            index += 1
        positions.append(index)
    n = len(ring)
    pieces = []
    for m in range(len(ordered)):
        start, stop = positions[m], positions[(m + 1) % len(ordered)]
        u0 = ordered[m][1]
        u1 = ordered[(m + 1) % len(ordered)][1]
        if m == len(ordered) - 1:
            u1 += 1.0
        span = (stop - start) % n or n
        points = [ring[(start + i) % n] for i in range(span + 1)]
        pieces.append(ParamCurve(PolyLine.from_points(points), (u0, u1)))
    return pieces


def _locate_on_ring(ring: List[Point2], point: Point2) -> Optional[Tuple[int, bool]]:
    n = len(ring)
    for i, v in enumerate(ring):
        if distance(v, point) <= 1e-12:
            return i, True
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if point_on_segment(point, a, b) or point_segment_distance(point, a, b) <= 1e-12:
            return i, False
    return None


def speed_ratio(pieces: Sequence[ParamCurve], level: int) -> float:
    """Largest piece speed over ``length * 2^k``, speed measured in domain units."""
    total = sum(p.length for p in pieces)
    perimeter = 4 * 2.0**-level
    fastest = max(p.length / ((p.domain[1] - p.domain[0]) * perimeter) for p in pieces)
    return fastest / (total * 2.0**level)


def build_pl_grids(
    phi: BoundaryMap,
    grids: Dict[int, GoodGrid],
    threads: Optional[int] = None,
    samples: int = EDGE_SAMPLES,
) -> Dict[int, PLGrid]:
    """Linearize consecutive levels with cross-level marked points preserved."""
    levels = sorted(grids)
    marks: Dict[int, Dict[EdgeKey, List[Mark]]] = {k: {} for k in levels}
    for lo, hi in zip(levels, levels[1:]):
        if hi != lo + 1:
            msg = f"Grid levels must be consecutive, got {levels}"
            raise ValueError(msg)
        ma, mb = cross_level_marks(grids[lo], grids[hi])
        for key, items in ma.items():
            marks[lo].setdefault(key, []).extend(items)
        for key, items in mb.items():
            marks[hi].setdefault(key, []).extend(items)

    result: Dict[int, PLGrid] = {}
    previous_delta = math.inf
    for k in levels:
        sampled = image_grid(phi, grids[k], marks[k], samples)
        dense = {key: e.points.copy() for key, e in sampled.edges.items()}
        radius = 2.0**-k / 8
        while True:
            try:
                stepped = linearize_vertices(sampled, radius)
                break
            except ConstructionError as e:
                radius /= 2
                logger.warning(f"Level {k}: {e.message}, radius halved to {radius:.3g}")
                if radius < MIN_CLEARANCE:
                    msg = f"Level {k}: vertex radius dropped below {MIN_CLEARANCE}"
                    raise ConstructionError(msg) from e
        delta = min(2.0**-k / 8, previous_delta * (1 - 1e-9))
        while True:
            pl = linearize_sides(stepped, delta, threads, dense)
            pl.radius = radius
            if k - 1 not in result:
                break
            try:
                preserve_cross_level(result[k - 1], pl)
                break
            except InvariantViolation as e:
                delta = pl.delta / 2
                logger.warning(f"Level {k}: {e.message}, delta halved to {delta:.3g}")
                if delta < MIN_CLEARANCE:
                    raise
        result[k] = pl
        previous_delta = pl.delta
    return result
