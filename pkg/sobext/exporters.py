"""Report and figure writers: CSV, JSON, OBJ wireframes and SVG drawings."""

from __future__ import annotations

import csv
import json
import logging
import math
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import drawsvg as dw
import numpy as np

from .analysis import EnergyReport
from .extension3d import GoalRatio
from .linearizer import PLGrid
from .plgeom import Point2, PolyLine

logger = logging.getLogger(__name__)

CANVAS_PX = 512
MARGIN_PX = 16
STROKE_WIDTH = 1.5


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    if isinstance(value, np.ndarray):
        return _finite(value.tolist())
    if isinstance(value, np.generic):
        return _finite(value.item())
    return value


def write_json(path: str, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_finite(data), f, indent=2)
    logger.info(f"Wrote {path}")


def write_energy_csv(path: str, reports: Sequence[EnergyReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "q", "level", "term", "cumulative", "slope"])
        for report in reports:
            for level, term, cumulative, slope in report.rows():
                writer.writerow([report.kind, report.q, level, term, cumulative, slope])
    logger.info(f"Wrote {path}")


def read_energy_csv(path: str) -> List[dict]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        return [
            {
                "kind": row["kind"],
                "q": float(row["q"]),
                "level": int(row["level"]),
                "term": float(row["term"]),
                "cumulative": float(row["cumulative"]),
                "slope": float(row["slope"]),
            }
            for row in csv.DictReader(f)
        ]


def write_goal_csv(path: str, ratios: Iterable[GoalRatio]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "j", "lipschitz", "own", "with_neighbours"])
        for r in ratios:
            writer.writerow([r.k, r.j, r.lipschitz, r.own, r.with_neighbours])
    logger.info(f"Wrote {path}")


def write_obj(path: str, curves: Sequence[np.ndarray]) -> None:
    """Polylines in 3D as OBJ vertices joined by line elements."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("# slice boundaries\n")
        offset = 1
        for curve in curves:
            for x, y, z in np.asarray(curve, dtype=float):
                f.write(f"v {x:.12g} {y:.12g} {z:.12g}\n")
            indices = " ".join(str(offset + i) for i in range(len(curve)))
            f.write(f"l {indices}\n")
            offset += len(curve)
    logger.info(f"Wrote {path} with {len(curves)} curves")


def read_obj(path: str) -> Tuple[np.ndarray, List[List[int]]]:
    vertices, lines = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "v":
                vertices.append([float(t) for t in tokens[1:4]])
            elif tokens[0] == "l":
                lines.append([int(t) - 1 for t in tokens[1:]])
    return np.asarray(vertices), lines


class Canvas:
    """Drawing with a y-up coordinate frame fitted to a bounding box."""

    def __init__(self, points: np.ndarray, size: int = CANVAS_PX) -> None:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.lo = points.min(axis=0)
        span = float((points.max(axis=0) - self.lo).max()) or 1.0
        self.scale = (size - 2 * MARGIN_PX) / span
        self.size = size
        self.drawing = dw.Drawing(size, size)
        self.drawing.append(dw.Rectangle(0, 0, size, size, fill="white"))

    def to_px(self, p: Sequence[float]) -> Tuple[float, float]:
        x = MARGIN_PX + (p[0] - self.lo[0]) * self.scale
        y = self.size - MARGIN_PX - (p[1] - self.lo[1]) * self.scale
        return (x, y)

    def polyline(
        self, points: Iterable[Point2], stroke: str, closed: bool = False, **kwargs: Any
    ) -> None:
        coords: List[float] = []
        for p in points:
            coords.extend(self.to_px(p))
        if closed:
            shape = dw.Lines(*coords, close=True, fill="none", stroke=stroke, **kwargs)
        else:
            shape = dw.Lines(*coords, fill="none", stroke=stroke, **kwargs)
        self.drawing.append(shape)

    def dot(self, p: Point2, fill: str, radius: float = 3.0) -> None:
        x, y = self.to_px(p)
        self.drawing.append(dw.Circle(x, y, radius, fill=fill))

    def save(self, path: str) -> None:
        self.drawing.save_svg(path)
        logger.info(f"Wrote {path}")


def geodesic_svg(
    path: str,
    polygon: Sequence[Point2],
    geodesic: PolyLine,
    foliation: Optional[Sequence[PolyLine]] = None,
) -> None:
    canvas = Canvas(np.asarray(polygon))
    canvas.polyline(polygon, "black", closed=True, stroke_width=STROKE_WIDTH)
    for curve in foliation or []:
        canvas.polyline(curve.vertices, "#4a90d9", stroke_width=STROKE_WIDTH / 2)
    canvas.polyline(geodesic.vertices, "#d94a4a", stroke_width=2 * STROKE_WIDTH)
    canvas.dot(geodesic.start, "#d94a4a")
    canvas.dot(geodesic.end, "#d94a4a")
    canvas.save(path)


def grid_svg(path: str, grid: PLGrid) -> None:
    """PL curves of a level with their marked vertices."""
    points = np.vstack([e.points for e in grid.edges.values()])
    canvas = Canvas(points)
    for edge in grid.edges.values():
        canvas.polyline(map(tuple, edge.points), "black", stroke_width=STROKE_WIDTH)
        for k in np.flatnonzero(edge.marked):
            canvas.dot(tuple(edge.points[k]), "#d94a4a", radius=2.0)
    canvas.save(path)
