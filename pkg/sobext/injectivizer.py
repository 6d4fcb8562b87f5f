"""Turning the monotone shortest curve extension into an injective one.

Shortest curves that run through a boundary vertex are spread along a short
inner normal segment at that vertex, strictly monotonically in the family
parameter.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .defaults import NUDGE_DIAL, TIME_SAMPLING_EXPONENT
from .plgeom import (
    IntersectionKind,
    JordanPolygon,
    Location,
    Point2,
    PolyLine,
    candidate_pairs,
    distance,
    hausdorff_one_sided,
    inner_normal,
    min_nonadjacent_side_distance,
    point_segment_distance,
    polyline_intersections,
    segments_intersect,
)
from .sobext_error import ConstructionError

logger = logging.getLogger(__name__)

_BISECTION_STEPS = 48


class CurveFamily(Protocol):
    polygon: JordanPolygon

    @property
    def interval(self) -> Tuple[float, float]: ...

    def raw_curve(self, s: float) -> PolyLine: ...

    def boundary_parameter(self, point: Point2) -> Optional[float]: ...

    def lower_region(self, s: float) -> np.ndarray: ...


def separation_distance(poly: JordanPolygon) -> float:
    """Smallest distance between non-adjacent sides, vertex to opposite side for triangles."""
    if len(poly) > 3:
        return min_nonadjacent_side_distance(poly)
    v = poly.vertices
    return min(point_segment_distance(v[i], v[i - 1], v[i - 2]) for i in range(3))


@dataclass
class NormalSegment:
    vertex: Point2
    normal: Tuple[float, float]
    epsilon: float
    separation: float

    @property
    def length(self) -> float:
        return self.epsilon * self.separation / 3

    @property
    def tip(self) -> Point2:
        return (
            self.vertex[0] + self.length * self.normal[0],
            self.vertex[1] + self.length * self.normal[1],
        )

    def at(self, fraction: float) -> Point2:
        r = fraction * self.length
        return (self.vertex[0] + r * self.normal[0], self.vertex[1] + r * self.normal[1])


def normal_segments(
    poly: JordanPolygon, epsilon: float = NUDGE_DIAL
) -> List[NormalSegment]:
    """Inner bisector segments of length ``epsilon * D / 3`` at every vertex."""
    if not 0 <= epsilon < 1:
        msg = f"Segment dial must lie in [0, 1), got {epsilon}"
        raise ValueError(msg)
    separation = separation_distance(poly)
    segments = [
        NormalSegment(v, inner_normal(poly, v), epsilon, separation)
        for v in poly.vertices
    ]
    if epsilon > 0:
        check_normal_segments(poly, segments)
    return segments


def check_normal_segments(poly: JordanPolygon, segments: Sequence[NormalSegment]) -> None:
    edges = poly.edges()
    pieces = [(s.vertex, s.tip) for s in segments]
    for piece in pieces:
        if poly.locate(piece[1]) != Location.INSIDE:
            msg = f"Normal segment at {piece[0]} leaves the polygon"
            raise ConstructionError(msg)
    for i, j in candidate_pairs(pieces, edges):
        kind, point = segments_intersect(pieces[i], edges[j])
        if kind != IntersectionKind.DISJOINT and point != pieces[i][0]:
            msg = f"Normal segment at {pieces[i][0]} meets the boundary at {point}"
            raise ConstructionError(msg)
    for i, j in candidate_pairs(pieces):
        kind, _ = segments_intersect(pieces[i], pieces[j])
        if kind != IntersectionKind.DISJOINT:
            msg = f"Normal segments at {pieces[i][0]} and {pieces[j][0]} intersect"
            raise ConstructionError(msg)


@dataclass
class MonotoneReparam:
    """Piecewise linear monotone map of [0, 1] onto [0, 1]."""

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.xs = np.asarray(self.xs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            msg = "Reparametrization needs matching knots and values"
            raise ValueError(msg)
        if np.any(np.diff(self.xs) <= 0):
            msg = "Reparametrization knots must be strictly increasing"
            raise ValueError(msg)

    @property
    def increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.values))

    def mirrored(self) -> MonotoneReparam:
        return MonotoneReparam(1 - self.xs[::-1], self.values[::-1])

    @property
    def flat_length(self) -> float:
        zero = np.flatnonzero(self.values > 0)
        if len(zero) == 0:
            return float(self.xs[-1])
        first = int(zero[0])
        return float(self.xs[first - 1]) if first > 0 else 0.0


@dataclass
class StrictReparam:
    source: MonotoneReparam
    flat: float
    mirrored: bool = False

    def __call__(self, x: float) -> float:
        if self.mirrored:
            x = 1 - x
        return strict_value(self.source(x), x, self.flat)


def strict_value(f_value: float, x: float, flat: float) -> float:
    if x <= 0:
        return 0.0
    if x <= flat:
        return x / (2 * flat)
    return (f_value + 1) / 2


def f_star(f: MonotoneReparam) -> StrictReparam:
    """Strictly monotone replacement: ``x/(2A)`` on the flat part, ``(f+1)/2`` after."""
    if f.increasing:
        return StrictReparam(f, f.flat_length)
    if f.decreasing:
        mirrored = f.mirrored()
        return StrictReparam(mirrored, mirrored.flat_length, mirrored=True)
    msg = "f_star needs a monotone function"
    raise ValueError(msg)


def _winding(point: Point2, ring: np.ndarray) -> int:
    rel = ring - np.asarray(point)
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    steps = np.diff(np.concatenate([angles, angles[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    return int(round(steps.sum() / (2 * np.pi)))


def _crossings(curve: PolyLine, segment: NormalSegment) -> List[Tuple[int, Point2, bool]]:
    """``(segment index, point, is_vertex)`` where the curve meets ``PV_P``."""
    piece = (segment.vertex, segment.tip)
    found: List[Tuple[int, Point2, bool]] = []
    vertices = curve.vertices
    for i, v in enumerate(vertices[1:-1], start=1):
        if v == segment.vertex:
            found.append((i, v, True))
    if found:
        return found
    for i, seg in enumerate(curve.segments()):
        kind, point = segments_intersect(seg, piece)
        if kind == IntersectionKind.DISJOINT or point is None:
            continue
        if point in (vertices[0], vertices[-1]):
            continue
        if point == seg[1] and i + 1 < len(vertices) - 1:
            found.append((i + 1, point, True))
        elif point != seg[0]:
            found.append((i, point, False))
    unique: List[Tuple[int, Point2, bool]] = []
    for item in found:
        if all(distance(item[1], other[1]) > 1e-12 for other in unique):
            unique.append(item)
    return unique


@dataclass
class VertexSpread:
    segment: NormalSegment
    ends_at: float
    through_tip: float
    flat: float

    def fraction(self, s: float) -> Optional[float]:
        lo, hi = sorted((self.ends_at, self.through_tip))
        if not lo < s < hi:
            return None
        return (s - self.ends_at) / (self.through_tip - self.ends_at)


def _bisect(predicate: Callable[[float], bool], lo: float, hi: float) -> float:
    # predicate(lo) is False and predicate(hi) is True
    for _ in range(_BISECTION_STEPS):
        mid = (lo + hi) / 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


class ModifiedFamily:
    """Curve modifier moving crossings of normal segments to strictly monotone positions."""

    def __init__(self, family: CurveFamily, spreads: List[VertexSpread]) -> None:
        self.family = family
        self.spreads = spreads

    def __call__(self, s: float, curve: PolyLine) -> PolyLine:
        vertices = list(curve.vertices)
        for spread in self.spreads:
            x = spread.fraction(s)
            if x is None:
                continue
            seg = spread.segment
            hits = _crossings(PolyLine.from_points(vertices), seg)
            if not hits:
                continue
            if len(hits) > 1:
                msg = f"Curve at {s} meets the normal segment at {seg.vertex} {len(hits)} times"
                raise ConstructionError(msg)
            index, point, is_vertex = hits[0]
            f_value = min(1.0, distance(point, seg.vertex) / seg.length)
            moved = seg.at(strict_value(f_value, x, spread.flat))
            if is_vertex:
                vertices[index] = moved
            else:
                vertices.insert(index + 1, moved)
        return PolyLine.from_points(vertices)

    def curve(self, s: float) -> PolyLine:
        return self(s, self.family.raw_curve(s))


def modify_curves(
    family: CurveFamily,
    segments: Optional[Sequence[NormalSegment]] = None,
    epsilon: float = NUDGE_DIAL,
) -> ModifiedFamily:
    """Spread curves touching boundary vertices along the vertex normal segments."""
    if segments is None:
        segments = normal_segments(family.polygon, epsilon)
    lo, hi = family.interval
    spreads: List[VertexSpread] = []
    for seg in segments:
        if seg.length <= 0:
            continue
        ends_at = family.boundary_parameter(seg.vertex)
        if ends_at is None:
            continue

        def below(s: float, tip: Point2 = seg.tip) -> bool:
            return _winding(tip, family.lower_region(s)) != 0

        if below(lo + 1e-12) == below(hi - 1e-12):
            continue
        if below(lo + 1e-12):
            through_tip = _bisect(lambda s: not below(s), lo, hi)
        else:
            through_tip = _bisect(below, lo, hi)
        if abs(through_tip - ends_at) <= 1e-12:
            continue

        def through_vertex(s: float, vertex: Point2 = seg.vertex) -> bool:
            return vertex in family.raw_curve(s).vertices[1:-1]

        step = (through_tip - ends_at) / 64
        if not any(through_vertex(ends_at + i * step) for i in range(1, 8)):
            # flat part empty, curves already avoid the vertex
            continue
        edge = _bisect(
            lambda x: not through_vertex(ends_at + x * (through_tip - ends_at)), 0.0, 1.0
        )
        spreads.append(VertexSpread(seg, ends_at, through_tip, edge))
        logger.debug(
            f"Spreading curves at {seg.vertex} over [{ends_at:.6g}, {through_tip:.6g}]"
        )
    logger.info(f"Injectivizer active at {len(spreads)} vertices")
    return ModifiedFamily(family, spreads)


@dataclass
class Violation:
    type: str
    s_values: List[float]
    location: Optional[Point2]


@dataclass
class InjectivityReport:
    checked_curves: int = 0
    checked_pairs: int = 0
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checked_curves": self.checked_curves,
            "checked_pairs": self.checked_pairs,
            "violations": [asdict(v) for v in self.violations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def verify_injective(
    curve_at: Callable[[float], PolyLine],
    poly: JordanPolygon,
    s_values: Sequence[float],
    pairs: int = 200,
    seed: int = 42,
) -> InjectivityReport:
    """Boundary contact and pairwise disjointness sweep over sampled curves."""
    report = InjectivityReport()
    curves = {s: curve_at(s) for s in s_values}
    edges = poly.edges()
    for s, curve in curves.items():
        report.checked_curves += 1
        ends = {curve.start, curve.end}
        segs = curve.segments()
        for i, j in candidate_pairs(segs, edges):
            kind, point = segments_intersect(segs[i], edges[j])
            if kind == IntersectionKind.DISJOINT or point in ends:
                continue
            report.violations.append(Violation("boundary-contact", [s], point))
            break
    keys = list(curves)
    if len(keys) > 1:
        rng = np.random.default_rng(seed)
        for _ in range(pairs):
            i, j = rng.choice(len(keys), size=2, replace=False)
            a, b = curves[keys[i]], curves[keys[j]]
            shared = {a.start, a.end} & {b.start, b.end}
            report.checked_pairs += 1
            for point in polyline_intersections(a, b):
                if point not in shared:
                    report.violations.append(
                        Violation("curve-intersection", [keys[i], keys[j]], point)
                    )
                    break
    if not report.ok:
        logger.warning(f"Injectivity check found {len(report.violations)} violations")
    return report


@dataclass
class Schedule:
    """Time dependent dial ``eps(t) = dial * G(t)`` with its separation bound ``D(t)``."""

    times: np.ndarray
    gate: np.ndarray
    separation: np.ndarray
    dial: float = NUDGE_DIAL

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.gate = np.asarray(self.gate, dtype=float)
        self.separation = np.asarray(self.separation, dtype=float)
        if np.any(self.gate < 0) or np.any(self.gate >= 1):
            msg = "Gate values must lie in [0, 1)"
            raise ValueError(msg)

    @classmethod
    def sample(
        cls,
        gate: Callable[[float], float],
        separation: Callable[[float], float],
        interval: Tuple[float, float] = (0.0, 1.0),
        exponent: int = TIME_SAMPLING_EXPONENT,
        dial: float = NUDGE_DIAL,
    ) -> Schedule:
        times = np.linspace(interval[0], interval[1], 2**exponent + 1)
        return cls(
            times,
            np.array([gate(t) for t in times]),
            np.array([separation(t) for t in times]),
            dial,
        )

    def epsilon(self, t: float) -> float:
        return self.dial * float(np.interp(t, self.times, self.gate))

    def product(self, t: float) -> float:
        return self.epsilon(t) * float(np.interp(t, self.times, self.separation))

    def max_jump(self) -> float:
        values = self.dial * self.gate * self.separation
        return float(np.abs(np.diff(values)).max()) if len(values) > 1 else 0.0


def time_lower_bound(
    separation: Callable[[float], float],
    interval: Tuple[float, float],
    exponent: int = TIME_SAMPLING_EXPONENT,
) -> float:
    times = np.linspace(interval[0], interval[1], 2**exponent + 1)
    return 0.9 * min(separation(t) for t in times)


def square_mesh(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices and counterclockwise triangles of an n by n split unit square."""
    xs = np.linspace(0.0, 1.0, n + 1)
    points = np.array([(x, y) for y in xs for x in xs])
    triangles = []
    for iy in range(n):
        for ix in range(n):
            a = iy * (n + 1) + ix
            b, c, d = a + 1, a + n + 2, a + n + 1
            triangles.extend([(a, b, c), (a, c, d)])
    return points, np.asarray(triangles)


def facet_determinants(
    points: np.ndarray, triangles: np.ndarray, values: np.ndarray
) -> np.ndarray:
    a, b, c = (values[triangles[:, i]] for i in range(3))
    pa, pb, pc = (points[triangles[:, i]] for i in range(3))
    image = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    domain = (pb[:, 0] - pa[:, 0]) * (pc[:, 1] - pa[:, 1]) - (pb[:, 1] - pa[:, 1]) * (
        pc[:, 0] - pa[:, 0]
    )
    return image / domain


def blend_levels(
    points: np.ndarray,
    triangles: np.ndarray,
    values: np.ndarray,
    values_star: np.ndarray,
    tau: float,
) -> np.ndarray:
    """``(1 - tau) h + tau h*`` on a mesh, certified facetwise."""
    values = np.asarray(values, dtype=float)
    values_star = np.asarray(values_star, dtype=float)
    blended = (1 - tau) * values + tau * values_star
    det = facet_determinants(points, triangles, blended)
    if det.min() <= 0:
        facet = int(np.argmin(det))
        msg = (
            f"Blend at tau={tau:.3g} folds facet {facet}, "
            f"minimum determinant {det.min():.3g}"
        )
        raise ConstructionError(msg)
    return blended


def rescale_interval(t: float, t_k: float, t_k_star: float) -> float:
    """Affine map of ``(t_k*, t_k]`` onto ``(M, t_k]``, M the interval midpoint."""
    if not t_k_star < t_k:
        msg = "Blend interval must be nondegenerate"
        raise ValueError(msg)
    middle = (t_k + t_k_star) / 2
    return middle + (t - t_k_star) * (t_k - middle) / (t_k - t_k_star)


def select_blend_time(
    values_at: Callable[[float], np.ndarray],
    points: np.ndarray,
    triangles: np.ndarray,
    t_k: float,
    max_power: int = 20,
    taus: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> float:
    """Largest ``t_k - 2^-m`` whose blend with the slice at ``t_k`` stays positive."""
    base = values_at(t_k)
    for m in range(1, max_power + 1):
        t_star = t_k - 2.0**-m
        other = values_at(t_star)
        try:
            for tau in taus:
                blend_levels(points, triangles, base, other, tau)
        except ConstructionError as e:
            logger.debug(f"t* = {t_star:.6g} rejected: {e.message}")
            continue
        return t_star
    msg = f"No blend time found below {t_k}"
    raise ConstructionError(msg)


def max_displacement(
    family: ModifiedFamily, s_values: Sequence[float], samples: int = 64
) -> float:
    """Largest distance from modified curves to their unmodified counterparts."""
    worst = 0.0
    for s in s_values:
        raw = family.family.raw_curve(s)
        moved = family.curve(s)
        points = np.array([moved.point_at_fraction(float(w)) for w in np.linspace(0, 1, samples)])
        worst = max(worst, hausdorff_one_sided(points, raw))
    return worst
