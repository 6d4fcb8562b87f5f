from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .plgeom import JordanPolygon, Point2, orient2d

logger = logging.getLogger(__name__)

Triangle = Tuple[int, int, int]
Edge = Tuple[int, int]


def _in_closed_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool:
    return orient2d(a, b, p) >= 0 and orient2d(b, c, p) >= 0 and orient2d(c, a, p) >= 0


def triangulate(poly: JordanPolygon, check_simple: bool = True) -> List[Triangle]:
    """Ear clipping triangulation of a simple polygon.

    Triangles are counterclockwise index triples into ``poly.vertices``.
    """
    if check_simple and not poly.is_simple():
        msg = "Cannot triangulate a polygon which is not simple"
        raise ValueError(msg)

    pts = poly.vertices
    remaining = list(range(len(pts)))
    triangles: List[Triangle] = []

    def is_reflex(i: int) -> bool:
        n = len(remaining)
        a, b, c = remaining[i - 1], remaining[i], remaining[(i + 1) % n]
        return orient2d(pts[a], pts[b], pts[c]) <= 0

    def is_ear(i: int) -> bool:
        n = len(remaining)
        a, b, c = remaining[i - 1], remaining[i], remaining[(i + 1) % n]
        if orient2d(pts[a], pts[b], pts[c]) <= 0:
            return False
        for j in range(n):
            v = remaining[j]
            if v in (a, b, c) or not is_reflex(j):
                continue
            if pts[v] in (pts[a], pts[b], pts[c]):
                continue
            if _in_closed_triangle(pts[v], pts[a], pts[b], pts[c]):
                return False
        return True

    guard = 0
    i = 0
    while len(remaining) > 3:
        n = len(remaining)
        if is_ear(i % n):
            i %= n
            triangles.append((remaining[i - 1], remaining[i], remaining[(i + 1) % n]))
            del remaining[i]
            guard = 0
            # step back so the neighbour that may have become an ear is retested
            i = max(i - 1, 0)
            continue
        i += 1
        guard += 1
        if guard > n:
            msg = "No ear found, polygon is not simple"
            raise ValueError(msg)
    triangles.append((remaining[0], remaining[1], remaining[2]))
    logger.debug(f"Triangulated {len(pts)}-gon into {len(triangles)} triangles")
    return triangles


@dataclass
class Triangulation:
    polygon: JordanPolygon
    triangles: List[Triangle]
    neighbours: Dict[Edge, int] = field(default_factory=dict)

    @classmethod
    def of(cls, polygon: JordanPolygon) -> Triangulation:
        triangles = triangulate(polygon, check_simple=False)
        neighbours: Dict[Edge, int] = {}
        for t, (a, b, c) in enumerate(triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                neighbours[(u, v)] = t
        return cls(polygon, triangles, neighbours)

    def adjacent(self, t: int) -> List[Tuple[int, Edge]]:
        """Triangles across each edge of ``t`` with the shared ccw edge of ``t``."""
        a, b, c = self.triangles[t]
        result = []
        for u, v in ((a, b), (b, c), (c, a)):
            other = self.neighbours.get((v, u))
            if other is not None:
                result.append((other, (u, v)))
        return result

    def locate(self, point: Point2) -> int:
        pts = self.polygon.vertices
        for t, (a, b, c) in enumerate(self.triangles):
            if _in_closed_triangle(point, pts[a], pts[b], pts[c]):
                return t
        msg = f"{point} is outside the triangulated polygon"
        raise ValueError(msg)

    def area(self) -> float:
        pts = self.polygon.vertices
        total = 0.0
        for a, b, c in self.triangles:
            (ax, ay), (bx, by), (cx, cy) = pts[a], pts[b], pts[c]
            total += 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
        return total
