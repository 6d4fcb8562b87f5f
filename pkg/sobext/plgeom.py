from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import shapely

from .defaults import COLLINEAR_TOLERANCE, SNAP_TOLERANCE

logger = logging.getLogger(__name__)

Point2 = Tuple[float, float]
Point3 = Tuple[float, float, float]
Segment = Tuple[Point2, Point2]

_EPSILON = 2.0**-53
# Shewchuk's first-stage error bound for the orientation determinant
_CCW_ERRBOUND_A = (3.0 + 16.0 * _EPSILON) * _EPSILON


def _sign(value: float) -> int:
    return int(value > 0) - int(value < 0)


def _orient_exact(a: Point2, b: Point2, c: Point2) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def orient_det(a: Point2, b: Point2, c: Point2) -> float:
    """Twice the signed area of triangle abc in floating point."""
    return (a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0])


def orient2d(a: Point2, b: Point2, c: Point2) -> int:
    """Sign of twice the signed area of abc: 1 ccw, -1 cw, 0 collinear.

    The floating determinant is trusted when it exceeds the forward error bound,
    otherwise the sign is recomputed with rational arithmetic.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright

    if detleft > 0:
        if detright <= 0:
            return _sign(det)
        detsum = detleft + detright
    elif detleft < 0:
        if detright >= 0:
            return _sign(det)
        detsum = -detleft - detright
    else:
        return _sign(det)

    errbound = _CCW_ERRBOUND_A * detsum
    if det >= errbound or -det >= errbound:
        return _sign(det)
    return _orient_exact(a, b, c)


def distance(a: Point2, b: Point2) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def lerp(a: Point2, b: Point2, t: float) -> Point2:
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _between(a: Point2, b: Point2, p: Point2) -> bool:
    # p assumed collinear with ab
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[
        1
    ] <= max(a[1], b[1])


def point_on_segment(p: Point2, a: Point2, b: Point2) -> bool:
    return orient2d(a, b, p) == 0 and _between(a, b, p)


class IntersectionKind(str, Enum):
    DISJOINT = "Disjoint"
    ENDPOINT_TOUCH = "Endpoint-Touch"
    INTERIOR_CROSS = "Interior-Cross"
    OVERLAP = "Overlap"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> IntersectionKind:
        if isinstance(name, str):
            try:
                return IntersectionKind(name.title())
            except ValueError:
                pass
        msg = f"'{name}' is not a valid IntersectionKind"
        raise ValueError(msg)


def line_intersection(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> Point2:
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    denom = rx * sy - ry * sx
    if denom == 0:
        msg = "Lines are parallel"
        raise ValueError(msg)
    t = ((q1[0] - p1[0]) * sy - (q1[1] - p1[1]) * sx) / denom
    t = min(1.0, max(0.0, t))
    return (p1[0] + t * rx, p1[1] + t * ry)


def segments_intersect(
    s1: Segment, s2: Segment
) -> Tuple[IntersectionKind, Optional[Point2]]:
    """Classify the intersection of two closed segments.

    Returns the kind and a witness point (the crossing point, the touching
    point or the first point of an overlap).
    """
    p1, p2 = s1
    q1, q2 = s2
    if p1 == p2 or q1 == q2:
        msg = f"Degenerate segment in {s1} / {s2}"
        raise ValueError(msg)

    o1 = orient2d(p1, p2, q1)
    o2 = orient2d(p1, p2, q2)
    o3 = orient2d(q1, q2, p1)
    o4 = orient2d(q1, q2, p2)

    if o1 == 0 and o2 == 0:
        return _collinear_overlap(p1, p2, q1, q2)
    if o1 * o2 > 0 or o3 * o4 > 0:
        return IntersectionKind.DISJOINT, None
    if o1 == 0:
        return IntersectionKind.ENDPOINT_TOUCH, q1
    if o2 == 0:
        return IntersectionKind.ENDPOINT_TOUCH, q2
    if o3 == 0:
        return IntersectionKind.ENDPOINT_TOUCH, p1
    if o4 == 0:
        return IntersectionKind.ENDPOINT_TOUCH, p2
    return IntersectionKind.INTERIOR_CROSS, line_intersection(p1, p2, q1, q2)


def _collinear_overlap(
    p1: Point2, p2: Point2, q1: Point2, q2: Point2
) -> Tuple[IntersectionKind, Optional[Point2]]:
    axis = 0 if abs(p2[0] - p1[0]) >= abs(p2[1] - p1[1]) else 1
    ps = sorted([p1, p2], key=lambda p: (p[axis], p[1 - axis]))
    qs = sorted([q1, q2], key=lambda p: (p[axis], p[1 - axis]))
    lo = max(ps[0], qs[0], key=lambda p: (p[axis], p[1 - axis]))
    hi = min(ps[1], qs[1], key=lambda p: (p[axis], p[1 - axis]))
    if (lo[axis], lo[1 - axis]) > (hi[axis], hi[1 - axis]):
        return IntersectionKind.DISJOINT, None
    if lo == hi:
        return IntersectionKind.ENDPOINT_TOUCH, lo
    return IntersectionKind.OVERLAP, lo


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    norm2 = dx * dx + dy * dy
    if norm2 == 0:
        return distance(p, a)
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / norm2
    t = min(1.0, max(0.0, t))
    return distance(p, (a[0] + t * dx, a[1] + t * dy))


def segment_distance(s1: Segment, s2: Segment) -> float:
    kind, _ = segments_intersect(s1, s2)
    if kind != IntersectionKind.DISJOINT:
        return 0.0
    return min(
        point_segment_distance(s1[0], *s2),
        point_segment_distance(s1[1], *s2),
        point_segment_distance(s2[0], *s1),
        point_segment_distance(s2[1], *s1),
    )


def _segment_distances(starts: np.ndarray, ends: np.ndarray, points: np.ndarray):
    # distances of every point to every segment, shape (len(points), len(starts))
    d = ends - starts
    norm2 = np.einsum("ij,ij->i", d, d)
    rel = points[:, None, :] - starts[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / norm2[None, :], 0.0, 1.0)
    closest = starts[None, :, :] + t[..., None] * d[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def candidate_pairs(
    segments_a: Sequence[Segment],
    segments_b: Optional[Sequence[Segment]] = None,
    buffer: float = 0.0,
) -> List[Tuple[int, int]]:
    """Index pairs of segments whose bounding envelopes come within ``buffer``.

    Uses a shapely STRtree; with a single list only pairs ``i < j`` are returned.
    """
    same = segments_b is None
    others = segments_a if segments_b is None else segments_b
    if not segments_a or not others:
        return []
    tree = shapely.STRtree([shapely.LineString(s) for s in others])
    queries = [shapely.LineString(s) for s in segments_a]
    if buffer > 0:
        queries = [q.buffer(buffer) for q in queries]
    left, right = tree.query(queries, predicate="intersects")
    pairs = []
    for i, j in zip(left.tolist(), right.tolist()):
        if same and i >= j:
            continue
        pairs.append((i, j))
    return sorted(pairs)


@dataclass(frozen=True)
class PolyLine:
    """Ordered chain of points.

    A single vertex is accepted only as the zero-length path between coinciding
    endpoints.
    """

    vertices: Tuple[Point2, ...]
    simple: bool = False

    def __post_init__(self) -> None:
        vertices = tuple((float(x), float(y)) for x, y in self.vertices)
        if not vertices:
            msg = "PolyLine needs at least one vertex"
            raise ValueError(msg)
        for p in vertices:
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                msg = f"Non-finite vertex {p}"
                raise ValueError(msg)
        for a, b in zip(vertices, vertices[1:]):
            if a == b:
                msg = f"Consecutive duplicate vertex {a}"
                raise ValueError(msg)
        object.__setattr__(self, "vertices", vertices)
        if self.simple and not self.is_simple():
            msg = "PolyLine flagged simple intersects itself"
            raise ValueError(msg)

    @classmethod
    def from_points(cls, points: Iterable[Point2], simple: bool = False) -> PolyLine:
        cleaned: List[Point2] = []
        for p in points:
            p = (float(p[0]), float(p[1]))
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        return cls(tuple(cleaned), simple=simple)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def start(self) -> Point2:
        return self.vertices[0]

    @property
    def end(self) -> Point2:
        return self.vertices[-1]

    def segments(self) -> List[Segment]:
        return list(zip(self.vertices, self.vertices[1:]))

    def cumulative_lengths(self) -> np.ndarray:
        pts = np.asarray(self.vertices)
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def length(self) -> float:
        return float(self.cumulative_lengths()[-1])

    def reversed(self) -> PolyLine:
        return PolyLine(tuple(reversed(self.vertices)), simple=self.simple)

    def point_at_fraction(self, fraction: float) -> Point2:
        if len(self.vertices) == 1:
            return self.vertices[0]
        cumulative = self.cumulative_lengths()
        total = cumulative[-1]
        if fraction <= 0:
            return self.vertices[0]
        if fraction >= 1:
            return self.vertices[-1]
        target = fraction * total
        i = int(np.searchsorted(cumulative, target, side="right")) - 1
        i = min(max(i, 0), len(self.vertices) - 2)
        span = cumulative[i + 1] - cumulative[i]
        return lerp(self.vertices[i], self.vertices[i + 1], (target - cumulative[i]) / span)

    def is_simple(self) -> bool:
        segments = self.segments()
        for i, j in candidate_pairs(segments):
            kind, point = segments_intersect(segments[i], segments[j])
            if j == i + 1:
                if kind == IntersectionKind.OVERLAP or (
                    kind == IntersectionKind.ENDPOINT_TOUCH
                    and point != segments[i][1]
                ):
                    return False
            elif kind != IntersectionKind.DISJOINT:
                return False
        return True

    def without_collinear(self) -> PolyLine:
        kept = list(self.vertices)
        changed = True
        while changed and len(kept) > 2:
            changed = False
            for i in range(1, len(kept) - 1):
                a, b, c = kept[i - 1], kept[i], kept[i + 1]
                if orient2d(a, b, c) == 0 and _between(a, c, b):
                    del kept[i]
                    changed = True
                    break
        return PolyLine(tuple(kept), simple=self.simple)


class Location(str, Enum):
    INSIDE = "Inside"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class JordanPolygon:
    """Counterclockwise simple polygon, the closing edge is implicit."""

    vertices: Tuple[Point2, ...]

    def __post_init__(self) -> None:
        vertices = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(vertices) < 3:
            msg = f"Polygon needs at least 3 vertices, got {len(vertices)}"
            raise ValueError(msg)
        object.__setattr__(self, "vertices", vertices)
        if self.signed_area() <= 0:
            msg = "Polygon vertices must be in counterclockwise order"
            raise ValueError(msg)

    def __len__(self) -> int:
        return len(self.vertices)

    def signed_area(self) -> float:
        pts = np.asarray(self.vertices)
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def area(self) -> float:
        return self.signed_area()

    @property
    def perimeter(self) -> float:
        return self.as_polyline().length

    def edges(self) -> List[Segment]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def as_polyline(self) -> PolyLine:
        return PolyLine(self.vertices + (self.vertices[0],))

    def diameter(self) -> float:
        pts = np.asarray(self.vertices)
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff**2).sum(axis=2)).max())

    def index_of(self, vertex: Point2) -> int:
        try:
            return self.vertices.index((float(vertex[0]), float(vertex[1])))
        except ValueError:
            msg = f"{vertex} is not a vertex of the polygon"
            raise ValueError(msg) from None

    def is_simple(self) -> bool:
        edges = self.edges()
        n = len(edges)
        for i, j in candidate_pairs(edges):
            kind, point = segments_intersect(edges[i], edges[j])
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                shared = edges[i][1] if j == i + 1 else edges[i][0]
                if kind == IntersectionKind.OVERLAP or (
                    kind == IntersectionKind.ENDPOINT_TOUCH and point != shared
                ):
                    return False
                if kind == IntersectionKind.INTERIOR_CROSS:
                    return False
            elif kind != IntersectionKind.DISJOINT:
                return False
        return True

    def locate(self, point: Point2) -> Location:
        inside = False
        x, y = point
        for a, b in self.edges():
            if point_on_segment(point, a, b):
                return Location.BOUNDARY
            if (a[1] > y) != (b[1] > y):
                # exact side test for the upward/downward crossing
                o = orient2d(a, b, point)
                if (b[1] > a[1] and o > 0) or (b[1] < a[1] and o < 0):
                    inside = not inside
        return Location.INSIDE if inside else Location.OUTSIDE

    def contains(self, point: Point2) -> bool:
        return self.locate(point) != Location.OUTSIDE

    def snap(self, point: Point2, tolerance: float = SNAP_TOLERANCE) -> Point2:
        """Closed polygon point equal to ``point`` up to rounding.

        Points outside by at most ``tolerance`` times the diameter are moved
        onto the closest edge, then along its inner normal until the exact
        location test accepts them.
        """
        point = (float(point[0]), float(point[1]))
        if self.locate(point) != Location.OUTSIDE:
            return point
        gap, (a, b) = min(
            (point_segment_distance(point, *edge), edge) for edge in self.edges()
        )
        limit = tolerance * self.diameter()
        if gap > limit:
            msg = f"Endpoint {point} is outside the closed polygon"
            raise ValueError(msg)
        dx, dy = b[0] - a[0], b[1] - a[1]
        norm = math.hypot(dx, dy)
        t = ((point[0] - a[0]) * dx + (point[1] - a[1]) * dy) / (norm * norm)
        t = min(1.0, max(0.0, t))
        snapped = (a[0] + t * dx, a[1] + t * dy)
        # counterclockwise, so the interior is on the left of a->b
        nx_, ny_ = -dy / norm, dx / norm
        step = max(abs(snapped[0]), abs(snapped[1]), norm) * _EPSILON
        while self.locate(snapped) == Location.OUTSIDE:
            if step > limit:
                msg = f"Unable to snap {point} onto the polygon boundary"
                raise ValueError(msg)
            snapped = (snapped[0] + step * nx_, snapped[1] + step * ny_)
            step *= 2
        logger.debug(f"Snapped {point} to {snapped}, gap {gap:.3g}")
        return snapped

    def to_shapely(self) -> shapely.Polygon:
        return shapely.Polygon(self.vertices)


def polygon_signed_area(points: Sequence[Point2]) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def normalize_polygon(
    points: Sequence[Point2],
    tolerance: float = COLLINEAR_TOLERANCE,
    check_simple: bool = True,
) -> JordanPolygon:
    """Drop repeated and collinear vertices and orient counterclockwise."""
    kept: List[Point2] = []
    for p in points:
        p = (float(p[0]), float(p[1]))
        if not kept or kept[-1] != p:
            kept.append(p)
    while len(kept) > 1 and kept[0] == kept[-1]:
        kept.pop()

    changed = True
    while changed and len(kept) > 3:
        changed = False
        n = len(kept)
        for i in range(n):
            a, b, c = kept[i - 1], kept[i], kept[(i + 1) % n]
            if abs(orient_det(a, b, c)) <= tolerance:
                del kept[i]
                changed = True
                break

    if len(kept) < 3 or polygon_signed_area(kept) == 0:
        msg = "Degenerate polygon with zero area"
        raise ValueError(msg)
    if polygon_signed_area(kept) < 0:
        kept.reverse()
    polygon = JordanPolygon(tuple(kept))
    if check_simple and not polygon.is_simple():
        msg = "Polygon is not simple"
        raise ValueError(msg)
    return polygon


@dataclass
class ParamCurve:
    """Constant speed traversal of ``polyline`` over ``domain``."""

    polyline: PolyLine
    domain: Tuple[float, float] = (0.0, 1.0)
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        lo, hi = self.domain
        if not hi > lo:
            msg = f"Empty parameter domain {self.domain}"
            raise ValueError(msg)
        self._cumulative = self.polyline.cumulative_lengths()

    @property
    def length(self) -> float:
        return float(self._cumulative[-1])

    @property
    def speed(self) -> float:
        return self.length / (self.domain[1] - self.domain[0])

    def __call__(self, t: float) -> Point2:
        return eval_constant_speed(self, t)


def eval_constant_speed(curve: ParamCurve, t: float) -> Point2:
    lo, hi = curve.domain
    slack = 1e-12 * (hi - lo)
    if t < lo - slack or t > hi + slack:
        msg = f"Parameter {t} outside domain [{lo}, {hi}]"
        raise ValueError(msg)
    vertices = curve.polyline.vertices
    cumulative = curve._cumulative
    total = cumulative[-1]
    if len(vertices) == 1 or total == 0:
        return vertices[0]
    fraction = min(1.0, max(0.0, (t - lo) / (hi - lo)))
    if fraction == 1.0:
        return vertices[-1]
    target = fraction * total
    i = int(np.searchsorted(cumulative, target, side="right")) - 1
    i = min(max(i, 0), len(vertices) - 2)
    span = cumulative[i + 1] - cumulative[i]
    return lerp(vertices[i], vertices[i + 1], (target - cumulative[i]) / span)


def min_nonadjacent_side_distance(poly: JordanPolygon) -> float:
    n = len(poly.vertices)
    if n < 4:
        msg = "Triangles have no pair of non-adjacent sides"
        raise ValueError(msg)
    pts = np.asarray(poly.vertices)
    starts = pts
    ends = np.roll(pts, -1, axis=0)
    # each endpoint against each side, then mask adjacent pairs
    from_starts = _segment_distances(starts, ends, starts)
    from_ends = _segment_distances(starts, ends, ends)
    pairwise = np.minimum(from_starts, from_ends)
    pairwise = np.minimum(pairwise, pairwise.T)
    index = np.arange(n)
    gap = np.abs(index[:, None] - index[None, :])
    adjacent = (gap <= 1) | (gap == n - 1)
    pairwise[adjacent] = np.inf
    return float(pairwise.min())


def inner_normal(poly: JordanPolygon, vertex: Point2) -> Tuple[float, float]:
    i = poly.index_of(vertex)
    n = len(poly.vertices)
    prev_, p, next_ = poly.vertices[i - 1], poly.vertices[i], poly.vertices[(i + 1) % n]
    return _bisector(prev_, p, next_)


def _bisector(prev_: Point2, p: Point2, next_: Point2) -> Tuple[float, float]:
    ux, uy = prev_[0] - p[0], prev_[1] - p[1]
    wx, wy = next_[0] - p[0], next_[1] - p[1]
    nu, nw = math.hypot(ux, uy), math.hypot(wx, wy)
    bx, by = ux / nu + wx / nw, uy / nu + wy / nw
    turn = orient2d(prev_, p, next_)
    norm = math.hypot(bx, by)
    if turn == 0 or norm < 1e-12:
        dx, dy = next_[0] - prev_[0], next_[1] - prev_[1]
        nd = math.hypot(dx, dy)
        return (-dy / nd, dx / nd)
    if turn < 0:
        bx, by = -bx, -by
    return (bx / norm, by / norm)


def hausdorff_one_sided(source: np.ndarray, target: PolyLine) -> float:
    """Largest distance from points of ``source`` to the polyline ``target``."""
    pts = np.asarray(target.vertices)
    if len(pts) == 1:
        return float(np.linalg.norm(source - pts[0], axis=1).max())
    distances = _segment_distances(pts[:-1], pts[1:], np.asarray(source, dtype=float))
    return float(distances.min(axis=1).max())


def polyline_intersections(
    a: PolyLine, b: PolyLine, tolerance: float = 1e-12
) -> List[Point2]:
    """Distinct intersection points of two polylines, overlaps give their start."""
    segs_a, segs_b = a.segments(), b.segments()
    found: List[Point2] = []
    if not segs_a or not segs_b:
        single = a if not segs_a else b
        other = b if not segs_a else a
        p = single.start
        if len(other) == 1:
            return [p] if distance(p, other.start) <= tolerance else []
        if any(point_on_segment(p, *s) for s in other.segments()):
            return [p]
        return []
    for i, j in candidate_pairs(segs_a, segs_b):
        kind, point = segments_intersect(segs_a[i], segs_b[j])
        if kind == IntersectionKind.DISJOINT or point is None:
            continue
        if all(distance(point, q) > tolerance for q in found):
            found.append(point)
    return found


def polylines_cross(a: PolyLine, b: PolyLine) -> bool:
    """True when some pair of segments crosses at interior points of both."""
    segs_a, segs_b = a.segments(), b.segments()
    for i, j in candidate_pairs(segs_a, segs_b):
        kind, _ = segments_intersect(segs_a[i], segs_b[j])
        if kind == IntersectionKind.INTERIOR_CROSS:
            return True
    return False
