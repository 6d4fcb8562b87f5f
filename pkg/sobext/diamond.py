"""Boundary parametrizations of the diamond ``|x| + |y| <= 1`` and square charts.

The boundary parameter ``u`` is the arc-length fraction along the diamond
boundary, counterclockwise, starting at the bottom vertex ``(0, -1)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .plgeom import JordanPolygon, Point2, PolyLine, normalize_polygon

logger = logging.getLogger(__name__)

DIAMOND: Tuple[Point2, ...] = ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0))
_UNIT = math.ulp(1.0)


def in_diamond(z: Point2, slack: float = 1e-12) -> bool:
    return abs(z[0]) + abs(z[1]) <= 1 + slack


def diamond_u(z: Point2) -> float:
    """Boundary parameter of a point on the diamond boundary."""
    x, y = z
    if abs(abs(x) + abs(y) - 1) > 1e-9:
        msg = f"{z} is not on the diamond boundary"
        raise ValueError(msg)
    if x >= 0 and y <= 0:
        return (1 + y) / 4
    if x >= 0:
        return 0.25 + y / 4
    if y >= 0:
        return 0.5 + (1 - y) / 4
    return 0.75 - y / 4


def diamond_point(u: float) -> Point2:
    u = u % 1.0
    side, frac = divmod(4 * u, 1.0)
    a = DIAMOND[int(side)]
    b = DIAMOND[(int(side) + 1) % 4]
    return (a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1]))


def right_u(s: float) -> float:
    """Parameter of ``b_s``, the right end of the horizontal segment at height s."""
    return (1 + s) / 4


def left_u(s: float) -> float:
    """Parameter of ``a_s``, the left end of the horizontal segment at height s."""
    return 0.75 - s / 4


def height_of_u(u: float) -> float:
    """Height ``s`` of the horizontal segment having the boundary point ``u`` as end."""
    u = u % 1.0
    return 4 * u - 1 if u <= 0.5 else 3 - 4 * u


def segment_fraction(z: Point2) -> Tuple[float, float]:
    """``(s, w)``: height and position along the horizontal segment through z."""
    x, s = z
    half = 1 - abs(s)
    if half <= 0:
        return s, 0.5
    w = (x + half) / (2 * half)
    return s, min(1.0, max(0.0, w))


def _periodic_interp(u: np.ndarray, knots: np.ndarray, values: np.ndarray):
    ext_knots = np.concatenate([knots, [knots[0] + 1.0]])
    ext_values = np.concatenate([values, values[:1]])
    return np.interp(np.mod(u, 1.0), ext_knots, ext_values)


@dataclass
class PLArc:
    """Piecewise linear path parametrized over [0, 1] by increasing knots."""

    knots: np.ndarray
    points: np.ndarray

    def __post_init__(self) -> None:
        self.knots = np.asarray(self.knots, dtype=float)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.knots) != len(self.points) or len(self.knots) < 2:
            msg = "PLArc needs matching knots and points, at least two of each"
            raise ValueError(msg)
        if self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            msg = "PLArc knots must run from 0 to 1"
            raise ValueError(msg)
        if np.any(np.diff(self.knots) <= 0):
            msg = "PLArc knots must be strictly increasing"
            raise ValueError(msg)

    @classmethod
    def constant_speed(cls, polyline: PolyLine) -> PLArc:
        if len(polyline) == 1:
            p = polyline.start
            return cls(np.array([0.0, 1.0]), np.array([p, p]))
        cumulative = polyline.cumulative_lengths()
        return cls(cumulative / cumulative[-1], np.asarray(polyline.vertices))

    @property
    def start(self) -> Point2:
        return (float(self.points[0, 0]), float(self.points[0, 1]))

    @property
    def end(self) -> Point2:
        return (float(self.points[-1, 0]), float(self.points[-1, 1]))

    def eval(self, w: float) -> Point2:
        x = float(np.interp(w, self.knots, self.points[:, 0]))
        y = float(np.interp(w, self.knots, self.points[:, 1]))
        return (x, y)

    def eval_many(self, ws: np.ndarray) -> np.ndarray:
        ws = np.asarray(ws, dtype=float)
        return np.stack(
            [
                np.interp(ws, self.knots, self.points[:, 0]),
                np.interp(ws, self.knots, self.points[:, 1]),
            ],
            axis=-1,
        )

    def reversed(self) -> PLArc:
        return PLArc(1.0 - self.knots[::-1], self.points[::-1].copy())

    def polyline(self) -> PolyLine:
        return PolyLine.from_points(map(tuple, self.points))

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    @staticmethod
    def blend(a: PLArc, b: PLArc, lam: float) -> PLArc:
        knots = np.union1d(a.knots, b.knots)
        points = (1 - lam) * a.eval_many(knots) + lam * b.eval_many(knots)
        return PLArc(knots, points)


@dataclass
class PLBoundaryMap:
    """Piecewise linear map from the diamond boundary parameter to the plane.

    ``knots`` are increasing values in [0, 1), ``points`` their images; the map is
    linear in ``u`` between knots and periodic.
    """

    knots: np.ndarray
    points: np.ndarray

    def __post_init__(self) -> None:
        self.knots = np.asarray(self.knots, dtype=float)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.knots) != len(self.points) or len(self.knots) < 3:
            msg = "Boundary map needs at least three knots with matching points"
            raise ValueError(msg)
        if self.knots[0] < 0 or self.knots[-1] >= 1 or np.any(np.diff(self.knots) <= 0):
            msg = "Boundary knots must be strictly increasing within [0, 1)"
            raise ValueError(msg)

    @classmethod
    def from_function(
        cls, f: Callable[[Point2], Point2], samples: int = 64
    ) -> PLBoundaryMap:
        """Sample ``f`` on the diamond boundary, all four vertices included."""
        per_side = max(1, samples // 4)
        knots = np.arange(4 * per_side) / (4 * per_side)
        points = np.array([f(diamond_point(u)) for u in knots])
        return cls(knots, points)

    @classmethod
    def from_polygon(cls, vertices: Sequence[Point2]) -> PLBoundaryMap:
        """Constant speed parametrization of a closed polygon."""
        pts = np.asarray(vertices, dtype=float)
        steps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        knots = np.concatenate([[0.0], np.cumsum(steps)[:-1]]) / steps.sum()
        return cls(knots, pts)

    @classmethod
    def from_arcs(cls, arcs: Iterable[Tuple[float, float, PLArc]]) -> PLBoundaryMap:
        """Concatenate arcs, each traversed over its ``[u0, u1]`` parameter range."""
        knots: List[float] = []
        points: List[Tuple[float, float]] = []
        for u0, u1, arc in arcs:
            for w, p in zip(arc.knots[:-1], arc.points[:-1]):
                knots.append(u0 + w * (u1 - u0))
                points.append((float(p[0]), float(p[1])))
        return cls(np.asarray(knots), np.asarray(points))

    def eval_u(self, u: float) -> Point2:
        u = float(u) % 1.0
        i = int(np.searchsorted(self.knots, u, side="right")) - 1
        if i >= 0 and self.knots[i] == u:
            return (float(self.points[i, 0]), float(self.points[i, 1]))
        value = self.eval_many(np.array([u]))[0]
        return (float(value[0]), float(value[1]))

    def eval_many(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        return np.stack(
            [
                _periodic_interp(us, self.knots, self.points[:, 0]),
                _periodic_interp(us, self.knots, self.points[:, 1]),
            ],
            axis=-1,
        )

    def eval_point(self, z: Point2) -> Point2:
        return self.eval_u(diamond_u(z))

    def arc(self, u0: float, u1: float) -> PLArc:
        """Restriction to ``[u0, u1]`` reparametrized over [0, 1]."""
        span = (u1 - u0) % 1.0 or 1.0
        rel = np.mod(self.knots - u0, 1.0)
        inner = np.sort(rel[(rel > 0) & (rel < span)])
        ws = np.concatenate([[0.0], inner / span, [1.0]])
        points = self.eval_many(u0 + ws * span)
        return PLArc(ws, points)

    def parameter_of(self, point: Point2, tolerance: float = 1e-12) -> Optional[float]:
        """Knot whose image is ``point``, None when no knot maps there."""
        d = np.linalg.norm(self.points - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        return float(self.knots[i]) if d[i] <= tolerance else None

    def target_polygon(self) -> JordanPolygon:
        try:
            return normalize_polygon(list(map(tuple, self.points)))
        except ValueError as e:
            msg = f"Boundary image is not a Jordan curve: {e}"
            raise ValueError(msg) from e

    def length(self) -> float:
        return float(
            np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1).sum()
        )

    def max_speed(self) -> float:
        steps = np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)
        spans = np.diff(np.concatenate([self.knots, [self.knots[0] + 1]]))
        return float((steps / spans).max())

    @staticmethod
    def blend(a: PLBoundaryMap, b: PLBoundaryMap, lam: float) -> PLBoundaryMap:
        knots = np.union1d(a.knots, b.knots)
        points = (1 - lam) * a.eval_many(knots) + lam * b.eval_many(knots)
        return PLBoundaryMap(knots, points)

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> PLBoundaryMap:
        return cls(np.asarray(data["knots"]), np.asarray(data["points"]))


@dataclass(frozen=True)
class SquareChart:
    """Rotation-scaling from an axis aligned square onto the diamond.

    The lower left corner goes to the bottom vertex so the boundary parameter of
    the square starts there and runs counterclockwise.
    """

    origin: Point2
    side: float

    @property
    def center(self) -> Point2:
        return (self.origin[0] + self.side / 2, self.origin[1] + self.side / 2)

    def to_diamond(self, point: Point2) -> Point2:
        cx, cy = self.center
        dx, dy = point[0] - cx, point[1] - cy
        return ((dx - dy) / self.side, (dx + dy) / self.side)

    def to_diamond_many(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=float) - np.asarray(self.center)
        return np.stack([rel[:, 0] - rel[:, 1], rel[:, 0] + rel[:, 1]], axis=1) / self.side

    def from_diamond(self, z: Point2) -> Point2:
        cx, cy = self.center
        return (cx + self.side * (z[0] + z[1]) / 2, cy + self.side * (z[1] - z[0]) / 2)

    def contains(self, point: Point2, slack: float = 1e-12) -> bool:
        x0, y0 = self.origin
        tol = slack * max(self.side, _UNIT)
        return (
            x0 - tol <= point[0] <= x0 + self.side + tol
            and y0 - tol <= point[1] <= y0 + self.side + tol
        )

    def boundary_u(self, point: Point2) -> float:
        """Boundary parameter of a point on the square boundary."""
        x0, y0 = self.origin
        h = self.side
        fx = min(1.0, max(0.0, (point[0] - x0) / h))
        fy = min(1.0, max(0.0, (point[1] - y0) / h))
        if fy == 0.0:
            return fx / 4
        if fx == 1.0:
            return 0.25 + fy / 4
        if fy == 1.0:
            return 0.5 + (1 - fx) / 4
        if fx == 0.0:
            return (0.75 + (1 - fy) / 4) % 1.0
        msg = f"{point} is not on the square boundary"
        raise ValueError(msg)

    def boundary_point(self, u: float) -> Point2:
        return self.from_diamond(diamond_point(u))

    def quarters(self) -> List[SquareChart]:
        """Charts of the four quarters: lower left, lower right, upper left, upper right."""
        h = self.side / 2
        x0, y0 = self.origin
        return [
            SquareChart((x0, y0), h),
            SquareChart((x0 + h, y0), h),
            SquareChart((x0, y0 + h), h),
            SquareChart((x0 + h, y0 + h), h),
        ]
