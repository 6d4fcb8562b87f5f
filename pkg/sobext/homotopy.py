"""Controlled homotopies of piecewise linear boundary curves."""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry.polygon import orient
from shapely.ops import substring

from .defaults import CORRIDOR_TOLERANCE, HOMOTOPY_CHECK_SAMPLES, NUDGE_DIAL
from .diamond import PLArc, PLBoundaryMap
from .geodesic import shortest_path
from .injectivizer import ModifiedFamily, modify_curves
from .linearizer import EdgeKey, PLGrid
from .plgeom import (
    JordanPolygon,
    Location,
    Point2,
    PolyLine,
    distance,
    normalize_polygon,
    orient2d,
    point_segment_distance,
    polyline_intersections,
)
from .sobext_error import ConstructionError

logger = logging.getLogger(__name__)


class HomotopyMode(str, Enum):
    AUTO = "Auto"
    STRAIGHT = "Straight"
    MIGRATION = "Migration"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> HomotopyMode:
        try:
            return HomotopyMode(name.title())
        except ValueError:
            msg = f"'{name}' is not a valid HomotopyMode"
            raise ValueError(msg)


def _check_time(t: float) -> None:
    if not 0 <= t <= 1:
        msg = f"Homotopy time {t} outside [0, 1]"
        raise ValueError(msg)


def position_on(line: PolyLine, point: Point2) -> float:
    """Arc length position of a point lying on (or next to) the polyline."""
    cumulative = line.cumulative_lengths()
    for v, c in zip(line.vertices, cumulative):
        if v == point:
            return float(c)
    if len(line) == 1:
        return 0.0
    best, where = math.inf, 0.0
    for i, (a, b) in enumerate(line.segments()):
        d = point_segment_distance(point, a, b)
        if d < best:
            best = d
            where = float(cumulative[i]) + min(distance(a, point), distance(a, b))
    return where


def fraction_on(line: PolyLine, point: Point2, tolerance: float = 1e-12) -> Optional[float]:
    """Arc length fraction of ``point`` if it lies on the polyline."""
    if len(line) == 1:
        return 0.0 if distance(point, line.start) <= tolerance else None
    if min(point_segment_distance(point, a, b) for a, b in line.segments()) > tolerance:
        return None
    return position_on(line, point) / line.length


def prefix(line: PolyLine, fraction: float) -> PolyLine:
    """Part of the polyline from its start up to the given arc length fraction."""
    if len(line) == 1 or fraction <= 0:
        return PolyLine((line.start,))
    if fraction >= 1:
        return line
    cumulative = line.cumulative_lengths()
    i = int(np.searchsorted(cumulative, fraction * cumulative[-1], side="right"))
    head = list(line.vertices[:i])
    end = line.point_at_fraction(fraction)
    if head[-1] != end:
        head.append(end)
    return PolyLine.from_points(head)


def suffix(line: PolyLine, fraction: float) -> PolyLine:
    return prefix(line.reversed(), 1 - fraction).reversed()


def join(*lines: PolyLine) -> PolyLine:
    points: List[Point2] = []
    for line in lines:
        if points and points[-1] != line.start:
            msg = f"Cannot join polylines at {points[-1]} and {line.start}"
            raise ValueError(msg)
        points.extend(line.vertices)
    return PolyLine.from_points(points)


def subpath(line: PolyLine, start: Point2, end: Point2) -> PolyLine:
    """Piece of the polyline between two of its points, which become its ends."""
    a, b = position_on(line, start), position_on(line, end)
    cumulative = line.cumulative_lengths()
    inner = [v for v, c in zip(line.vertices, cumulative) if a < c < b]
    return PolyLine.from_points([start, *inner, end])


def reparametrize(line: PolyLine, source: PLArc, target: PLArc, mu: float) -> PLArc:
    """Arc along ``line`` whose arc length profile blends those of two arcs on it."""
    if mu <= 0:
        return source
    if mu >= 1:
        return target
    total = line.length
    if total == 0:
        return source
    knots = np.union1d(source.knots, target.knots)
    s_src = np.interp(knots, source.knots, [position_on(line, tuple(p)) for p in source.points])
    s_tgt = np.interp(knots, target.knots, [position_on(line, tuple(p)) for p in target.points])
    profile = np.maximum.accumulate((1 - mu) * s_src + mu * s_tgt)
    cumulative = line.cumulative_lengths()[1:-1]
    extra = [
        float(np.interp(c, profile, knots))
        for c in cumulative
        if profile[0] < c < profile[-1]
    ]
    all_knots = np.union1d(knots, extra)
    positions = np.interp(all_knots, knots, profile)
    points = np.array([line.point_at_fraction(float(s / total)) for s in positions])
    return PLArc(all_knots, points)


class HalfFixedHomotopy:
    """Family of curves from ``gamma0`` (t=0) through a shortest curve (t=1/2) to ``gamma1``.

    Both curves run from A to B and meet only there. For t <= 1/2 the curve
    follows gamma0 from A over the portion 1 - 2t of its length and continues
    along the shortest path to B in the closed region between the curves; for
    t >= 1/2 the same construction runs on gamma1 over the portion 2t - 1.
    Tails through vertices of the region are spread along inner normal segments.
    """

    def __init__(
        self,
        gamma0: PolyLine,
        gamma1: PolyLine,
        nudge: bool = True,
        epsilon: float = NUDGE_DIAL,
    ) -> None:
        if gamma0.start != gamma1.start or gamma0.end != gamma1.end:
            msg = "Curves of a half-fixed homotopy must share both endpoints"
            raise ValueError(msg)
        self.gamma0 = gamma0
        self.gamma1 = gamma1
        self.constant = gamma0.vertices == gamma1.vertices
        self.polygon: Optional[JordanPolygon] = None
        self.modifier: Optional[ModifiedFamily] = None
        if self.constant:
            return
        ends = (gamma0.start, gamma0.end)
        common = [p for p in polyline_intersections(gamma0, gamma1) if p not in ends]
        if common:
            msg = f"Curves meet at {common[0]} besides their endpoints"
            raise ConstructionError(msg)
        ring = list(gamma0.vertices) + list(gamma1.vertices[-2:0:-1])
        try:
            self.polygon = normalize_polygon(ring)
        except ValueError as e:
            msg = f"Curves do not bound a region: {e}"
            raise ConstructionError(msg) from e
        if nudge and epsilon > 0:
            self.modifier = modify_curves(_TailFamily(self), epsilon=epsilon)

    @property
    def start(self) -> Point2:
        return self.gamma0.start

    @property
    def end(self) -> Point2:
        return self.gamma0.end

    def anchor(self, t: float) -> Point2:
        if t <= 0.5:
            return self.gamma0.point_at_fraction(1 - 2 * t)
        return self.gamma1.point_at_fraction(2 * t - 1)

    def head(self, t: float) -> PolyLine:
        if t <= 0.5:
            return prefix(self.gamma0, 1 - 2 * t)
        return prefix(self.gamma1, 2 * t - 1)

    def tail(self, t: float) -> PolyLine:
        assert self.polygon is not None
        return shortest_path(self.polygon, self.anchor(t), self.end)

    def curve(self, t: float) -> PolyLine:
        _check_time(t)
        if self.constant or t == 0:
            return self.gamma0
        if t == 1:
            return self.gamma1
        tail = self.tail(t)
        if self.modifier is not None:
            tail = self.modifier(t, tail)
        return join(self.head(t), tail)

    def arc(self, t: float) -> PLArc:
        return PLArc.constant_speed(self.curve(t))

    @classmethod
    def between_maps(
        cls, phi0: PLBoundaryMap, phi1: PLBoundaryMap, nudge: bool = True
    ) -> HalfFixedHomotopy:
        """Homotopy of the upper halves, the maps must agree on the lower half."""
        lower = np.concatenate(
            [
                phi0.knots[(phi0.knots >= 0.75) | (phi0.knots <= 0.25)],
                phi1.knots[(phi1.knots >= 0.75) | (phi1.knots <= 0.25)],
            ]
        )
        if not np.allclose(phi0.eval_many(lower), phi1.eval_many(lower), atol=1e-12):
            msg = "Boundary maps differ on the fixed half"
            raise ValueError(msg)
        gamma0 = phi0.arc(0.25, 0.75).polyline()
        gamma1 = phi1.arc(0.25, 0.75).polyline()
        return cls(gamma0, gamma1, nudge)


class _TailFamily:
    """Shortest tails of a half-fixed homotopy as a curve family."""

    interval = (0.0, 1.0)

    def __init__(self, homotopy: HalfFixedHomotopy) -> None:
        assert homotopy.polygon is not None
        self.homotopy = homotopy
        self.polygon = homotopy.polygon

    def raw_curve(self, t: float) -> PolyLine:
        return self.homotopy.tail(t)

    def boundary_parameter(self, point: Point2) -> Optional[float]:
        if point == self.homotopy.end:
            return None
        fraction = fraction_on(self.homotopy.gamma0, point)
        if fraction is not None:
            return (1 - fraction) / 2
        fraction = fraction_on(self.homotopy.gamma1, point)
        return None if fraction is None else (1 + fraction) / 2

    def lower_region(self, t: float) -> np.ndarray:
        h = self.homotopy
        tail = h.tail(t)
        if t <= 0.5:
            rest = suffix(h.gamma0, 1 - 2 * t).reversed()
            ring = list(tail.vertices) + list(rest.vertices[1:-1])
        else:
            back = h.gamma0.reversed()
            ring = (
                list(tail.vertices)
                + list(back.vertices[1:])
                + list(prefix(h.gamma1, 2 * t - 1).vertices[1:-1])
            )
        return np.asarray(ring, dtype=float).reshape(-1, 2)


def half_fixed_homotopy(
    phi0: PLBoundaryMap, phi1: PLBoundaryMap, t: float, nudge: bool = True
) -> PLBoundaryMap:
    """Boundary map at time t, fixed on the lower half of the diamond boundary."""
    _check_time(t)
    if np.array_equal(phi0.knots, phi1.knots) and np.array_equal(phi0.points, phi1.points):
        return phi0
    homotopy = HalfFixedHomotopy.between_maps(phi0, phi1, nudge)
    middle = homotopy.arc(t)
    return PLBoundaryMap.from_arcs(
        [
            (0.0, 0.25, phi0.arc(0.0, 0.25)),
            (0.25, 0.75, middle),
            (0.75, 1.0, phi0.arc(0.75, 1.0)),
        ]
    )


class ChainHomotopy:
    """Half-fixed homotopies between consecutive common points of two curves."""

    def __init__(self, gamma0: PolyLine, gamma1: PolyLine, nudge: bool = True) -> None:
        if gamma0.start != gamma1.start or gamma0.end != gamma1.end:
            msg = "Curves must share both endpoints"
            raise ValueError(msg)
        ends = (gamma0.start, gamma0.end)
        common = [p for p in polyline_intersections(gamma0, gamma1) if p not in ends]
        common.sort(key=lambda p: position_on(gamma0, p))
        along1 = [position_on(gamma1, p) for p in common]
        if any(b <= a for a, b in zip(along1, along1[1:])):
            msg = "Common points of the curves appear in different orders"
            raise ConstructionError(msg)
        cuts = [gamma0.start, *common, gamma0.end]
        self.pieces = [
            HalfFixedHomotopy(subpath(gamma0, a, b), subpath(gamma1, a, b), nudge)
            for a, b in zip(cuts, cuts[1:])
        ]
        self.gamma0 = gamma0
        self.gamma1 = gamma1
        logger.debug(f"Chain homotopy over {len(self.pieces)} pieces")

    def curve(self, t: float) -> PolyLine:
        _check_time(t)
        if t == 0:
            return self.gamma0
        if t == 1:
            return self.gamma1
        return join(*(piece.curve(t) for piece in self.pieces))

    def arc(self, t: float) -> PLArc:
        return PLArc.constant_speed(self.curve(t))


@dataclass
class Cross:
    """Four (or fewer) arms from a common center to their ends."""

    center: Point2
    arms: List[PolyLine]

    def __post_init__(self) -> None:
        for arm in self.arms:
            if arm.start != self.center:
                msg = f"Arm starting at {arm.start} does not leave the center {self.center}"
                raise ValueError(msg)

    @property
    def ends(self) -> List[Point2]:
        return [arm.end for arm in self.arms]


def certify_cross(cross: Cross, corridor: Optional[shapely.Geometry] = None) -> None:
    """Simple arms meeting only at the center, inside the corridor when given."""
    slack = None
    if corridor is not None:
        x0, y0, x1, y1 = corridor.bounds
        slack = corridor.buffer(CORRIDOR_TOLERANCE * max(x1 - x0, y1 - y0))
    for i, arm in enumerate(cross.arms):
        if not arm.is_simple():
            msg = f"Cross arm {i} intersects itself"
            raise ConstructionError(msg)
        if slack is not None and len(arm) > 1:
            if not slack.covers(shapely.LineString(arm.vertices)):
                msg = f"Cross arm {i} leaves its corridor"
                raise ConstructionError(msg)
    for i in range(len(cross.arms)):
        for j in range(i + 1, len(cross.arms)):
            meets = polyline_intersections(cross.arms[i], cross.arms[j])
            if any(p != cross.center for p in meets):
                msg = f"Cross arms {i} and {j} meet away from the center"
                raise ConstructionError(msg)


def _left_normal(a: Point2, b: Point2) -> Tuple[float, float]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    n = math.hypot(dx, dy)
    return (-dy / n, dx / n)


class OpenedCurve:
    """Curve ``psi`` opened into two branches by side segments at its vertices.

    The split point of vertex P at time t >= t_P sits at
    ``|Q - P| / |S_P| = (t - t_P) / (1 - t_P)`` on each side segment.
    """

    def __init__(self, psi: PolyLine, clearance: float) -> None:
        if len(psi) < 2:
            msg = "An opened curve needs a nondegenerate base curve"
            raise ValueError(msg)
        self.psi = psi
        cumulative = psi.cumulative_lengths()
        self.times = cumulative[:-1] / cumulative[-1]
        segments = psi.segments()
        lengths = np.diff(cumulative)
        self.sides: List[Tuple[float, float]] = []
        self.lengths: List[float] = []
        for i, v in enumerate(psi.vertices[:-1]):
            if i == 0:
                normal = _left_normal(*segments[0])
                nearby = lengths[0]
            else:
                n0 = _left_normal(*segments[i - 1])
                n1 = _left_normal(*segments[i])
                bx, by = n0[0] + n1[0], n0[1] + n1[1]
                norm = math.hypot(bx, by)
                normal = (bx / norm, by / norm) if norm > 1e-12 else n1
                nearby = min(lengths[i - 1], lengths[i])
            self.sides.append(normal)
            self.lengths.append(min(clearance, float(nearby)) / 8)

    def center(self, t: float) -> Point2:
        return self.psi.point_at_fraction(t)

    def split_point(self, index: int, t: float, sign: int) -> Point2:
        t_p = self.times[index]
        if t < t_p:
            msg = f"Vertex {index} is not opened before time {t_p}"
            raise ValueError(msg)
        r = sign * self.lengths[index] * (t - t_p) / (1 - t_p)
        p = self.psi.vertices[index]
        n = self.sides[index]
        return (p[0] + r * n[0], p[1] + r * n[1])

    def branch(self, t: float, sign: int) -> PolyLine:
        """Branch from the opened start vertex to the center at time t."""
        points = [
            self.split_point(i, t, sign)
            for i in range(len(self.times))
            if self.times[i] < t or i == 0
        ]
        return PolyLine.from_points(points + [self.center(t)])


class CrossDeformation:
    """Move a cross center along ``path`` keeping the arms beyond their anchors."""

    def __init__(
        self,
        cross: Cross,
        target: Point2,
        corridor: Optional[shapely.Geometry] = None,
        path: Optional[PolyLine] = None,
        trailing: Optional[Sequence[int]] = None,
        samples: int = HOMOTOPY_CHECK_SAMPLES,
    ) -> None:
        self.cross = cross
        self.target = target
        self.corridor = corridor
        self.constant = cross.center == target
        firsts = [distance(*arm.segments()[0]) for arm in cross.arms if len(arm) > 1]
        self.radius = 0.4 * min(firsts) if firsts else 0.0
        self.anchors = [self._anchor(arm) for arm in cross.arms]
        if self.constant:
            return
        self.path = path if path is not None else PolyLine((cross.center, target))
        if self.path.start != cross.center or self.path.end != target:
            msg = "Migration path must run from the center to the target"
            raise ValueError(msg)
        self.opened = OpenedCurve(self.path, self.radius)
        self.trailing = self._trailing() if trailing is None else list(trailing)
        self.signs = {i: self._sign(i) for i in self.trailing}
        for t in np.linspace(0.0, 1.0, samples):
            certify_cross(self.at(float(t)), corridor)

    def _anchor(self, arm: PolyLine) -> Point2:
        if len(arm) == 1:
            return arm.start
        a, b = arm.segments()[0]
        f = self.radius / distance(a, b)
        return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))

    def _angle(self, p: Point2) -> float:
        c = self.cross.center
        return math.atan2(p[1] - c[1], p[0] - c[0])

    def _trailing(self) -> List[int]:
        direction = self._angle(self.path.vertices[1])
        offsets = [
            (self._angle(arm.vertices[1]) - direction) % (2 * math.pi)
            for arm in self.cross.arms
        ]
        order = sorted(range(len(offsets)), key=lambda i: offsets[i])
        leading = {order[0], order[-1]}
        return [i for i in range(len(offsets)) if i not in leading]

    def _sign(self, index: int) -> int:
        a, b = self.path.vertices[0], self.path.vertices[1]
        return 1 if orient2d(a, b, self.anchors[index]) >= 0 else -1

    def heads(self, t: float) -> List[PolyLine]:
        """Arm pieces from the moving center to the anchors."""
        _check_time(t)
        if self.constant or t == 0:
            return [PolyLine.from_points([self.cross.center, q]) for q in self.anchors]
        center = self.opened.center(t)
        result = []
        for i, q in enumerate(self.anchors):
            if i in self.signs:
                branch = self.opened.branch(t, self.signs[i]).reversed()
                result.append(PolyLine.from_points([*branch.vertices, q]))
            else:
                result.append(PolyLine.from_points([center, q]))
        return result

    def at(self, t: float) -> Cross:
        arms = []
        for head, arm, q in zip(self.heads(t), self.cross.arms, self.anchors):
            rest = subpath(arm, q, arm.end) if len(arm) > 1 else PolyLine((q,))
            arms.append(join(head, rest))
        return Cross(arms[0].start if arms else self.target, arms)


def cross_deform(
    cross: Cross,
    target_center: Point2,
    corridor: Optional[shapely.Geometry],
    t: float,
    path: Optional[PolyLine] = None,
    trailing: Optional[Sequence[int]] = None,
) -> Cross:
    return CrossDeformation(cross, target_center, corridor, path, trailing).at(t)


def _spread(line: PolyLine, lo: float, hi: float) -> List[Tuple[float, Point2]]:
    # vertices of ``line`` at constant speed over the parameter range [lo, hi]
    span = PLArc.constant_speed(line)
    return [(lo + w * (hi - lo), tuple(p)) for w, p in zip(span.knots, span.points)]


def migrated_arc(
    arc: PLArc, head_start: PolyLine, head_end: PolyLine, w_start: float, w_end: float
) -> PLArc:
    """Arc with its two end pieces replaced by migrated heads."""
    front = _spread(head_start, 0.0, w_start)
    back = _spread(head_end.reversed(), w_end, 1.0)
    inner = [(w, tuple(p)) for w, p in zip(arc.knots, arc.points) if w_start < w < w_end]
    items = front + inner + back
    return PLArc(np.array([w for w, _ in items]), np.array([p for _, p in items]))


def _anchor_parameter(arc: PLArc, anchor: Point2, at_end: bool) -> float:
    i = -2 if at_end else 1
    j = -1 if at_end else 0
    a, b = arc.points[j], arc.points[i]
    f = distance(tuple(a), anchor) / distance(tuple(a), tuple(b))
    return float(arc.knots[j] + f * (arc.knots[i] - arc.knots[j]))


class SideHomotopy:
    """Reparametrize, deform by a chain homotopy, reparametrize onto the target arc."""

    def __init__(self, source: PLArc, target: PLArc, nudge: bool = True) -> None:
        self.source = source
        self.target = target
        self.line0 = source.polyline()
        self.line1 = target.polyline()
        self.chain = ChainHomotopy(self.line0, self.line1, nudge)

    def arc(self, b: float) -> PLArc:
        _check_time(b)
        if b == 0:
            return self.source
        if b == 1:
            return self.target
        if b <= 1 / 3:
            steady = PLArc.constant_speed(self.line0)
            return reparametrize(self.line0, self.source, steady, 3 * b)
        if b < 2 / 3:
            return self.chain.arc(3 * b - 1)
        steady = PLArc.constant_speed(self.line1)
        return reparametrize(self.line1, steady, self.target, 3 * b - 2)


def _corner_path(center: Point2, target: Point2, arms: Sequence[PolyLine]) -> PolyLine:
    path = PolyLine((center, target))
    for arm in arms:
        if any(p != center for p in polyline_intersections(path, arm)):
            msg = f"Straight migration from {center} to {target} meets an arm"
            raise ConstructionError(msg)
    return path


def _is_simple_map(boundary: PLBoundaryMap) -> bool:
    try:
        boundary.target_polygon()
    except ValueError:
        return False
    return True


class BoundaryHomotopy:
    """Family of boundary maps from ``source`` (0) to ``target`` (1).

    Straight mode blends the parametrizations; migration mode first moves the
    four corner images along crosses, then deforms each side by a chain homotopy.
    """

    def __init__(
        self,
        source: PLBoundaryMap,
        target: PLBoundaryMap,
        mode: HomotopyMode = HomotopyMode.AUTO,
        samples: int = HOMOTOPY_CHECK_SAMPLES,
        nudge: bool = True,
    ) -> None:
        self.source = source
        self.target = target
        self.samples = samples
        self.nudge = nudge
        if mode == HomotopyMode.AUTO:
            mode = HomotopyMode.STRAIGHT if self.straight_ok() else HomotopyMode.MIGRATION
        self.mode = mode
        if mode == HomotopyMode.MIGRATION:
            self._build_migration()

    def straight_ok(self) -> bool:
        return all(
            _is_simple_map(PLBoundaryMap.blend(self.source, self.target, float(lam)))
            for lam in np.linspace(0.0, 1.0, self.samples)[1:-1]
        )

    def _build_migration(self) -> None:
        sides = [self.source.arc(i / 4, (i + 1) / 4) for i in range(4)]
        self.corners: List[CrossDeformation] = []
        for i in range(4):
            outgoing = sides[i].polyline()
            incoming = sides[i - 1].polyline().reversed()
            center = outgoing.start
            target = self.target.eval_u(i / 4)
            path = _corner_path(center, target, [outgoing, incoming])
            self.corners.append(
                CrossDeformation(Cross(center, [outgoing, incoming]), target, path=path)
            )
        self.sides = sides
        self.anchor_w = [
            (
                _anchor_parameter(sides[i], self.corners[i].anchors[0], at_end=False),
                _anchor_parameter(sides[i], self.corners[(i + 1) % 4].anchors[1], at_end=True),
            )
            for i in range(4)
        ]
        self.side_homotopies = [
            SideHomotopy(
                self._migrated(i, 1.0), self.target.arc(i / 4, (i + 1) / 4), self.nudge
            )
            for i in range(4)
        ]

    def _migrated(self, i: int, a: float) -> PLArc:
        head_start = self.corners[i].heads(a)[0]
        head_end = self.corners[(i + 1) % 4].heads(a)[1]
        w0, w1 = self.anchor_w[i]
        return migrated_arc(self.sides[i], head_start, head_end, w0, w1)

    def at(self, lam: float) -> PLBoundaryMap:
        _check_time(lam)
        if lam == 0:
            return self.source
        if lam == 1:
            return self.target
        if self.mode == HomotopyMode.STRAIGHT:
            return PLBoundaryMap.blend(self.source, self.target, lam)
        if lam <= 0.5:
            arcs = [self._migrated(i, 2 * lam) for i in range(4)]
        else:
            arcs = [h.arc(2 * lam - 1) for h in self.side_homotopies]
        return PLBoundaryMap.from_arcs((i / 4, (i + 1) / 4, arc) for i, arc in enumerate(arcs))


def grid_level_homotopy(
    source: PLBoundaryMap,
    target: PLBoundaryMap,
    lam: float,
    mode: HomotopyMode = HomotopyMode.AUTO,
) -> PLBoundaryMap:
    return BoundaryHomotopy(source, target, mode).at(lam)


# children edges along the outer boundary of a parent cell, in boundary order
# (kind, dx, dy, reversed) relative to (2 ix, 2 iy)
# fmt: off
_OUTER_EDGES = [
    ("h", 0, 0, False), ("h", 1, 0, False),
    ("v", 2, 0, False), ("v", 2, 1, False),
    ("h", 1, 2, True), ("h", 0, 2, True),
    ("v", 0, 1, True), ("v", 0, 0, True),
]
# fmt: on

# level-k edge to the pair of child edges covering it, in edge direction
_CHILD_EDGES = {
    "h": [("h", 0, 0), ("h", 1, 0)],
    "v": [("v", 0, 0), ("v", 0, 1)],
}


def children_map(fine: PLGrid, ix: int, iy: int) -> PLBoundaryMap:
    """Boundary map of the union of the four children of parent cell (ix, iy)."""
    arcs = []
    for kind, dx, dy, rev in _OUTER_EDGES:
        arc = fine.edges[(kind, 2 * ix + dx, 2 * iy + dy)].arc()
        arcs.append(arc.reversed() if rev else arc)
    return PLBoundaryMap.from_arcs((i / 8, (i + 1) / 8, arc) for i, arc in enumerate(arcs))


def _edge_target(fine: PLGrid, key: EdgeKey) -> PLArc:
    kind, ix, iy = key
    first, second = (
        fine.edges[(c, 2 * ix + dx, 2 * iy + dy)].arc() for c, dx, dy in _CHILD_EDGES[kind]
    )
    knots = np.concatenate([first.knots / 2, 0.5 + second.knots[1:] / 2])
    points = np.concatenate([first.points, second.points[1:]])
    return PLArc(knots, points)


def vertex_image(pl: PLGrid, ix: int, iy: int) -> Point2:
    if ("h", ix, iy) in pl.edges:
        return pl.edges[("h", ix, iy)].start
    return pl.edges[("h", ix - 1, iy)].end


class GridLevelHomotopy:
    """Boundary homotopies of every cell of a level, consistent across shared edges.

    Vertex migrations are computed per grid vertex and side deformations per
    grid edge, so neighbouring cells see the same curves on common sides.
    """

    def __init__(
        self,
        coarse: PLGrid,
        fine: PLGrid,
        mode: HomotopyMode = HomotopyMode.AUTO,
        samples: int = HOMOTOPY_CHECK_SAMPLES,
        nudge: bool = True,
    ) -> None:
        if fine.level != coarse.level + 1:
            msg = "Grid homotopy needs consecutive levels"
            raise ValueError(msg)
        self.coarse = coarse
        self.fine = fine
        self.samples = samples
        self.nudge = nudge
        self._lock = threading.Lock()
        self._targets: Dict[int, PLBoundaryMap] = {}
        self._vertices: Dict[Tuple[int, int], CrossDeformation] = {}
        self._vertex_arms: Dict[Tuple[int, int], List[EdgeKey]] = {}
        self._sides: Dict[EdgeKey, SideHomotopy] = {}
        n = coarse.size
        if mode == HomotopyMode.AUTO:
            straight = all(self._straight_ok(j) for j in range(n * n))
            mode = HomotopyMode.STRAIGHT if straight else HomotopyMode.MIGRATION
        self.mode = mode
        logger.info(f"Level {coarse.level} boundary homotopy in {mode} mode")

    def source(self, j: int) -> PLBoundaryMap:
        return self.coarse.cell_map(j)

    def target(self, j: int) -> PLBoundaryMap:
        cached = self._targets.get(j)
        if cached is None:
            n = self.coarse.size
            cached = children_map(self.fine, j % n, j // n)
            self._targets[j] = cached
        return cached

    def _straight_ok(self, j: int) -> bool:
        source, target = self.source(j), self.target(j)
        return all(
            _is_simple_map(PLBoundaryMap.blend(source, target, float(lam)))
            for lam in np.linspace(0.0, 1.0, self.samples)[1:-1]
        )

    def _incident(self, ix: int, iy: int) -> List[Tuple[EdgeKey, bool]]:
        # edges at a vertex with a flag telling whether they end there
        candidates = [
            (("h", ix, iy), False),
            (("v", ix, iy), False),
            (("h", ix - 1, iy), True),
            (("v", ix, iy - 1), True),
        ]
        return [(key, ends) for key, ends in candidates if key in self.coarse.edges]

    def _cells_at(self, ix: int, iy: int) -> List[int]:
        n = self.coarse.size
        return [
            cy * n + cx
            for cx, cy in ((ix, iy), (ix - 1, iy), (ix, iy - 1), (ix - 1, iy - 1))
            if 0 <= cx < n and 0 <= cy < n
        ]

    def _migration_path(self, ix: int, iy: int, arms: List[PolyLine]) -> PolyLine:
        center = arms[0].start
        target = vertex_image(self.fine, 2 * ix, 2 * iy)
        try:
            return _corner_path(center, target, arms)
        except ConstructionError:
            pass
        for j in self._cells_at(ix, iy):
            polygon = self.coarse.cell_map(j).target_polygon()
            if polygon.locate(target) != Location.OUTSIDE:
                return shortest_path(polygon, center, target)
        msg = f"No migration route from vertex ({ix}, {iy}) to its target"
        raise ConstructionError(msg, (self.coarse.level, iy * self.coarse.size + ix))

    def vertex_migration(self, ix: int, iy: int) -> CrossDeformation:
        with self._lock:
            cached = self._vertices.get((ix, iy))
        if cached is not None:
            return cached
        incident = self._incident(ix, iy)
        arms = []
        for key, ends in incident:
            line = self.coarse.edges[key].polyline()
            arms.append(line.reversed() if ends else line)
        path = self._migration_path(ix, iy, arms)
        corridor = shapely.unary_union(
            [
                self.coarse.cell_map(j).target_polygon().to_shapely()
                for j in self._cells_at(ix, iy)
            ]
            + [shapely.LineString(path.vertices).buffer(max(path.length, 1e-12))]
        )
        deformation = CrossDeformation(
            Cross(arms[0].start, arms), path.end, corridor, path, samples=self.samples
        )
        with self._lock:
            self._vertices[(ix, iy)] = deformation
            self._vertex_arms[(ix, iy)] = [key for key, _ in incident]
        return deformation

    def _head(self, ix: int, iy: int, key: EdgeKey, a: float) -> Tuple[PolyLine, Point2]:
        deformation = self.vertex_migration(ix, iy)
        index = self._vertex_arms[(ix, iy)].index(key)
        return deformation.heads(a)[index], deformation.anchors[index]

    def migrated_edge(self, key: EdgeKey, a: float) -> PLArc:
        kind, ix, iy = key
        end = (ix + 1, iy) if kind == "h" else (ix, iy + 1)
        arc = self.coarse.edges[key].arc()
        head_start, q0 = self._head(ix, iy, key, a)
        head_end, q1 = self._head(*end, key, a)
        w0 = _anchor_parameter(arc, q0, at_end=False)
        w1 = _anchor_parameter(arc, q1, at_end=True)
        return migrated_arc(arc, head_start, head_end, w0, w1)

    def side(self, key: EdgeKey) -> SideHomotopy:
        with self._lock:
            cached = self._sides.get(key)
        if cached is None:
            cached = SideHomotopy(
                self.migrated_edge(key, 1.0), _edge_target(self.fine, key), self.nudge
            )
            with self._lock:
                cached = self._sides.setdefault(key, cached)
        return cached

    def edge_arc(self, key: EdgeKey, lam: float) -> PLArc:
        if lam <= 0.5:
            return self.migrated_edge(key, 2 * lam)
        return self.side(key).arc(2 * lam - 1)

    def cell_map(self, j: int, lam: float) -> PLBoundaryMap:
        _check_time(lam)
        if lam == 0:
            return self.source(j)
        if lam == 1:
            return self.target(j)
        if self.mode == HomotopyMode.STRAIGHT:
            return PLBoundaryMap.blend(self.source(j), self.target(j), lam)
        arcs = []
        for edge, rev in self.coarse.cell_edges(j):
            arc = self.edge_arc(edge.key, lam)
            arcs.append(arc.reversed() if rev else arc)
        try:
            boundary = PLBoundaryMap.from_arcs(
                (i / 4, (i + 1) / 4, arc) for i, arc in enumerate(arcs)
            )
            boundary.target_polygon()
        except ValueError as e:
            raise ConstructionError(str(e), (self.coarse.level, j)) from e
        return boundary


def _inward_offset(poly: JordanPolygon, point: Point2, amount: float) -> Point2:
    edges = poly.edges()
    a, b = min(edges, key=lambda e: point_segment_distance(point, *e))
    n = _left_normal(a, b)
    return (point[0] + amount * n[0], point[1] + amount * n[1])


def nudge_inward(cross: Cross, poly: JordanPolygon, clearance: float) -> Cross:
    """Move arm vertices closer than ``clearance`` to the boundary inward."""
    edges = poly.edges()
    arms = []
    moved = 0
    for arm in cross.arms:
        points = list(arm.vertices)
        for i in range(1, len(points) - 1):
            d = min(point_segment_distance(points[i], *e) for e in edges)
            if d < clearance:
                points[i] = _inward_offset(poly, points[i], clearance - d)
                moved += 1
        arms.append(PolyLine.from_points(points))
    center = cross.center
    if min(point_segment_distance(center, *e) for e in edges) < clearance:
        d = min(point_segment_distance(center, *e) for e in edges)
        center = _inward_offset(poly, center, clearance - d)
        arms = [PolyLine.from_points([center, *arm.vertices[1:]]) for arm in arms]
        moved += 1
    logger.debug(f"Nudged {moved} cross vertices inward")
    return Cross(center, arms)


def _boundary_clearance(cross: Cross, poly: JordanPolygon) -> float:
    shape = shapely.LinearRing(poly.vertices)
    ends = [shapely.Point(e) for e in cross.ends]
    best = math.inf
    for arm in cross.arms:
        for p in arm.vertices[:-1]:
            best = min(best, shape.distance(shapely.Point(p)))
        for a, b in arm.segments():
            piece = shapely.LineString([a, b])
            if any(piece.distance(e) == 0 for e in ends):
                continue
            best = min(best, shape.distance(piece))
    return best


def _lane(poly: JordanPolygon, depth: float) -> shapely.LineString:
    region = orient(poly.to_shapely(), 1.0).buffer(-depth, join_style="mitre")
    if region.is_empty or region.geom_type != "Polygon":
        msg = f"Inward offset by {depth:.3g} splits or empties the region"
        raise ConstructionError(msg)
    return shapely.LineString(orient(region, 1.0).exterior.coords)


def _walk(lane: shapely.LineString, start: float, end: float, ccw: bool) -> List[Point2]:
    total = lane.length
    start, end = start % total, end % total
    if not ccw:
        return _walk(lane, end, start, True)[::-1]
    if end >= start:
        pieces = [substring(lane, start, end)]
    else:
        pieces = [substring(lane, start, total), substring(lane, 0.0, end)]
    points: List[Point2] = []
    for piece in pieces:
        coords = [piece.coords[0]] if piece.geom_type == "Point" else list(piece.coords)
        points.extend((float(x), float(y)) for x, y in coords)
    return points


def count_crossings(arm: PolyLine, cross: Cross) -> int:
    ends = set(cross.ends) | {arm.end}
    found: List[Point2] = []
    for other in cross.arms:
        for p in polyline_intersections(arm, other):
            if p not in ends and all(distance(p, q) > 1e-12 for q in found):
                found.append(p)
    return len(found)


def build_t_fix(
    t1: Cross, t2: Cross, polygon: JordanPolygon, corner: Optional[Point2] = None
) -> Cross:
    """Cross with the same ends running close to the boundary from near a corner.

    Two of its arms cross each of ``t1`` and ``t2`` exactly once, the other two
    cross neither.
    """
    if sorted(t1.ends) != sorted(t2.ends) or len(t1.ends) != 4:
        msg = "Both crosses need the same four ends"
        raise ValueError(msg)
    outline = shapely.LineString(polygon.vertices + (polygon.vertices[0],))
    clearance = min(_boundary_clearance(t1, polygon), _boundary_clearance(t2, polygon))
    if clearance <= 0:
        msg = "Crosses touch the boundary away from their ends"
        raise ConstructionError(msg)
    if corner is None:
        corner = max(polygon.vertices, key=lambda v: min(distance(v, e) for e in t1.ends))
    depths = [clearance * f for f in (0.2, 0.4, 0.6)]
    base = outline.project(shapely.Point(corner))
    total = outline.length
    order = sorted(
        range(4), key=lambda i: (outline.project(shapely.Point(t1.ends[i])) - base) % total
    )
    outer, inner = _lane(polygon, depths[0]), _lane(polygon, depths[1])
    deep = _lane(polygon, depths[2])
    center_point = deep.interpolate(deep.project(shapely.Point(corner)))
    center = (float(center_point.x), float(center_point.y))

    def route(end: Point2, lane: shapely.LineString, offset: float, ccw: bool) -> PolyLine:
        home = lane.project(shapely.Point(corner))
        start = home + offset if ccw else home - offset
        # approach the end from one step before its lane position
        stop = lane.project(shapely.Point(end)) + (-step if ccw else step)
        return PolyLine.from_points([center, *_walk(lane, start, stop, ccw), end])

    arms: Dict[int, PolyLine] = {}
    step = depths[2]
    arms[order[0]] = route(t1.ends[order[0]], outer, 2 * step, True)
    arms[order[1]] = route(t1.ends[order[1]], inner, 4 * step, True)
    arms[order[2]] = route(t1.ends[order[2]], inner, 4 * step, False)
    arms[order[3]] = route(t1.ends[order[3]], outer, 2 * step, False)
    t_fix = Cross(center, [arms[i] for i in range(4)])
    try:
        certify_cross(t_fix, polygon.to_shapely())
    except ConstructionError as e:
        msg = f"{e.message}, minimum clearance {clearance:.3g}"
        raise ConstructionError(msg) from e
    for name, cross in (("first", t1), ("second", t2)):
        counts = sorted(count_crossings(arm, cross) for arm in t_fix.arms)
        if counts != [0, 0, 1, 1]:
            msg = (
                f"Fixed cross meets the {name} cross with counts {counts}, "
                f"minimum clearance {clearance:.3g}"
            )
            raise ConstructionError(msg)
    return t_fix
