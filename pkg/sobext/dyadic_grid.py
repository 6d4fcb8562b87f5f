from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .defaults import (
    AREA_SUBGRID,
    BOUNDARY_SAMPLES_PER_SIDE,
    DEFAULT_CANDIDATES,
    SEPARATION_FACTOR,
    SHIFT_WINDOW_HIGH,
    SHIFT_WINDOW_LOW,
)
from .plgeom import (
    IntersectionKind,
    Point2,
    Point3,
    candidate_pairs,
    distance,
    segments_intersect,
)
from .sobext_error import InvariantViolation

logger = logging.getLogger(__name__)

Box = Tuple[Point2, Point2]
Quad = Tuple[Point2, Point2, Point2, Point2]


class GradientSampler(Protocol):
    domain: Optional[Box]

    def gradient_norm(self, points: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class DyadicSquare:
    level: int
    index: int

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def ix(self) -> int:
        return self.index % (1 << self.level)

    @property
    def iy(self) -> int:
        return self.index // (1 << self.level)

    @property
    def corner(self) -> Point2:
        return (self.ix * self.side, self.iy * self.side)

    @property
    def center(self) -> Point2:
        x, y = self.corner
        return (x + self.side / 2, y + self.side / 2)

    def corners(self) -> Quad:
        x, y = self.corner
        h = self.side
        return ((x, y), (x + h, y), (x + h, y + h), (x, y + h))

    def children(self) -> List[DyadicSquare]:
        n = 1 << (self.level + 1)
        return [
            DyadicSquare(self.level + 1, (2 * self.iy + dy) * n + 2 * self.ix + dx)
            for dy in (0, 1)
            for dx in (0, 1)
        ]

    def neighbours(self) -> List[DyadicSquare]:
        """Edge adjacent squares of the same level."""
        n = 1 << self.level
        result = []
        for dx, dy in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ix, iy = self.ix + dx, self.iy + dy
            if 0 <= ix < n and 0 <= iy < n:
                result.append(DyadicSquare(self.level, iy * n + ix))
        return result

    @classmethod
    def at(cls, level: int, ix: int, iy: int) -> DyadicSquare:
        return cls(level, iy * (1 << level) + ix)


def _check_level(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        msg = f"Level must be a positive integer, got {k}"
        raise ValueError(msg)


def standard_decomposition(k: int) -> List[DyadicSquare]:
    _check_level(k)
    return [DyadicSquare(k, j) for j in range(1 << (2 * k))]


def square_corners(k: int) -> np.ndarray:
    """Corners of all level-k squares, shape ``(4**k, 4, 2)`` in index order."""
    _check_level(k)
    n = 1 << k
    h = 2.0**-k
    iy, ix = np.divmod(np.arange(n * n), n)
    x0, y0 = ix * h, iy * h
    return np.stack(
        [
            np.stack([x0, y0], axis=1),
            np.stack([x0 + h, y0], axis=1),
            np.stack([x0 + h, y0 + h], axis=1),
            np.stack([x0, y0 + h], axis=1),
        ],
        axis=1,
    )


def shift_window(k: int) -> Tuple[float, float]:
    h = 2.0**-k
    return (h * SHIFT_WINDOW_LOW, h * SHIFT_WINDOW_HIGH)


@dataclass
class GoodGrid:
    """Quadrilateral grid obtained from the level-k lattice by vertex shifts.

    ``vertices[ix, iy]`` is the shifted image of the lattice point
    ``(ix, iy) * 2**-k``.
    """

    level: int
    vertices: np.ndarray
    shift: Optional[float] = None
    ratio: Optional[float] = None

    @property
    def size(self) -> int:
        return 1 << self.level

    @property
    def side(self) -> float:
        return 2.0**-self.level

    def vertex(self, ix: int, iy: int) -> Point2:
        x, y = self.vertices[ix, iy]
        return (float(x), float(y))

    def quad(self, j: int) -> Quad:
        n = self.size
        ix, iy = j % n, j // n
        return (
            self.vertex(ix, iy),
            self.vertex(ix + 1, iy),
            self.vertex(ix + 1, iy + 1),
            self.vertex(ix, iy + 1),
        )

    def quads(self) -> List[Quad]:
        return [self.quad(j) for j in range(self.size * self.size)]

    def quad_array(self) -> np.ndarray:
        v = self.vertices
        return np.stack(
            [
                v[:-1, :-1].transpose(1, 0, 2).reshape(-1, 2),
                v[1:, :-1].transpose(1, 0, 2).reshape(-1, 2),
                v[1:, 1:].transpose(1, 0, 2).reshape(-1, 2),
                v[:-1, 1:].transpose(1, 0, 2).reshape(-1, 2),
            ],
            axis=1,
        )

    def check_quads(self) -> None:
        """Verify every quad is simple and quads are pairwise interior-disjoint."""
        n = self.size
        for j in range(n * n):
            q = self.quad(j)
            first, _ = segments_intersect((q[0], q[1]), (q[2], q[3]))
            second, _ = segments_intersect((q[1], q[2]), (q[3], q[0]))
            if first != IntersectionKind.DISJOINT or second != IntersectionKind.DISJOINT:
                msg = f"Quadrilateral {j} is not simple"
                raise InvariantViolation(msg, {"quad": j})
        # grid edges of different lattice lines meet only at shared vertices
        edges = self.edges()
        segments = [e for _, e in edges]
        for a, b in candidate_pairs(segments):
            kind, point = segments_intersect(segments[a], segments[b])
            if kind == IntersectionKind.DISJOINT:
                continue
            shared = set(segments[a]) & set(segments[b])
            if kind == IntersectionKind.ENDPOINT_TOUCH and point in shared:
                continue
            msg = f"Grid edges {edges[a][0]} and {edges[b][0]} intersect"
            raise InvariantViolation(msg, {"edges": [edges[a][0], edges[b][0]]})

    def edges(self) -> List[Tuple[Tuple[str, int, int], Tuple[Point2, Point2]]]:
        """All grid edges keyed by ``(orientation, ix, iy)`` of their first vertex."""
        n = self.size
        result = []
        for iy in range(n + 1):
            for ix in range(n):
                result.append(
                    (("h", ix, iy), (self.vertex(ix, iy), self.vertex(ix + 1, iy)))
                )
        for ix in range(n + 1):
            for iy in range(n):
                result.append(
                    (("v", ix, iy), (self.vertex(ix, iy), self.vertex(ix, iy + 1)))
                )
        return result

    def to_dict(self) -> dict:
        n = self.size
        flat = [
            [float(self.vertices[ix, iy, 0]), float(self.vertices[ix, iy, 1])]
            for iy in range(n + 1)
            for ix in range(n + 1)
        ]

        def vid(ix: int, iy: int) -> int:
            return iy * (n + 1) + ix

        quads = [
            [vid(ix, iy), vid(ix + 1, iy), vid(ix + 1, iy + 1), vid(ix, iy + 1)]
            for iy in range(n)
            for ix in range(n)
        ]
        return {"level": self.level, "vertices": flat, "quads": quads}

    @classmethod
    def from_dict(cls, data: dict) -> GoodGrid:
        level = int(data["level"])
        n = 1 << level
        flat = np.asarray(data["vertices"], dtype=float)
        if flat.shape != ((n + 1) ** 2, 2):
            msg = f"Expected {(n + 1) ** 2} vertices for level {level}"
            raise ValueError(msg)
        vertices = flat.reshape(n + 1, n + 1, 2).transpose(1, 0, 2).copy()
        return cls(level, vertices)


def lattice(k: int) -> np.ndarray:
    n = 1 << k
    h = 2.0**-k
    ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    return np.stack([ix * h, iy * h], axis=2).astype(float)


ShiftSpec = Union[float, Tuple[float, float], np.ndarray]


def shift_grid(k: int, shifts: ShiftSpec) -> GoodGrid:
    """Shift every lattice vertex by its offset, offsets must lie in the window."""
    _check_level(k)
    n = 1 << k
    offsets = np.broadcast_to(np.asarray(shifts, dtype=float), (n + 1, n + 1, 2))
    lo, hi = shift_window(k)
    slack = 1e-12 * 2.0**-k
    if offsets.min() < lo - slack or offsets.max() > hi + slack:
        msg = (
            f"Vertex offsets must lie in [{lo}, {hi}] at level {k}, "
            f"got range [{offsets.min()}, {offsets.max()}]"
        )
        raise ValueError(msg)
    uniform = offsets.reshape(-1)
    diagonal = float(uniform[0]) if np.all(uniform == uniform[0]) else None
    return GoodGrid(k, lattice(k) + offsets, shift=diagonal)


def _in_domain(points: np.ndarray, domain: Optional[Box]) -> np.ndarray:
    if domain is None:
        return np.ones(points.shape[:-1], dtype=bool)
    (x0, y0), (x1, y1) = domain
    return (
        (points[..., 0] >= x0)
        & (points[..., 0] <= x1)
        & (points[..., 1] >= y0)
        & (points[..., 1] <= y1)
    )


def boundary_integrals(
    sampler: GradientSampler, quads: np.ndarray, p: float, samples: int
) -> np.ndarray:
    """Midpoint rule for the integral of |Dφ|^p over each quad boundary."""
    starts = quads
    ends = np.roll(quads, -1, axis=1)
    nodes = (np.arange(samples) + 0.5) / samples
    points = starts[:, :, None, :] + nodes[None, None, :, None] * (ends - starts)[
        :, :, None, :
    ]
    if not _in_domain(points, sampler.domain).all():
        msg = "Gradient sampler is undefined on the grid lines"
        raise ValueError(msg)
    values = sampler.gradient_norm(points.reshape(-1, 2)).reshape(points.shape[:-1])
    values = np.where(np.isfinite(values), values, 0.0) ** p
    weights = np.linalg.norm(ends - starts, axis=2) / samples
    return (values.sum(axis=2) * weights).sum(axis=1)


def area_integrals(
    sampler: GradientSampler, quads: np.ndarray, p: float, subgrid: int
) -> np.ndarray:
    """Integral of |Dφ|^p over the doubled quads, tensor midpoint rule."""
    centroid = quads.mean(axis=1, keepdims=True)
    doubled = centroid + 2.0 * (quads - centroid)
    nodes = (np.arange(subgrid) + 0.5) / subgrid
    xi, eta = np.meshgrid(nodes, nodes, indexing="ij")
    xi, eta = xi.reshape(-1), eta.reshape(-1)
    a, b, c, d = (doubled[:, i, None, :] for i in range(4))
    w00 = ((1 - xi) * (1 - eta))[None, :, None]
    w10 = (xi * (1 - eta))[None, :, None]
    w11 = (xi * eta)[None, :, None]
    w01 = ((1 - xi) * eta)[None, :, None]
    points = w00 * a + w10 * b + w11 * c + w01 * d
    d_xi = (1 - eta)[None, :, None] * (b - a) + eta[None, :, None] * (c - d)
    d_eta = (1 - xi)[None, :, None] * (d - a) + xi[None, :, None] * (c - b)
    jacobian = np.abs(d_xi[..., 0] * d_eta[..., 1] - d_xi[..., 1] * d_eta[..., 0])
    mask = _in_domain(points, sampler.domain)
    values = np.zeros(mask.shape)
    if mask.any():
        grad = sampler.gradient_norm(points[mask])
        values[mask] = np.where(np.isfinite(grad), grad, 0.0) ** p
    return (values * jacobian).sum(axis=1) / (subgrid * subgrid)


def energy_ratio(
    sampler: GradientSampler,
    grid: GoodGrid,
    p: float,
    samples: int = BOUNDARY_SAMPLES_PER_SIDE,
    subgrid: int = AREA_SUBGRID,
) -> float:
    quads = grid.quad_array()
    boundary = boundary_integrals(sampler, quads, p, samples)
    area = area_integrals(sampler, quads, p, subgrid)
    ratios = np.where(area > 0, grid.side * boundary / np.where(area > 0, area, 1.0), 0)
    return float(ratios.max())


def select_good_grid(
    sampler: GradientSampler,
    k: int,
    p: float,
    candidates: int = DEFAULT_CANDIDATES,
    samples: int = BOUNDARY_SAMPLES_PER_SIDE,
    subgrid: int = AREA_SUBGRID,
    threads: Optional[int] = None,
) -> Tuple[GoodGrid, float]:
    """Pick the diagonal shift whose worst boundary/area energy ratio is smallest."""
    _check_level(k)
    if candidates < 2:
        msg = f"At least 2 candidates required, got {candidates}"
        raise ValueError(msg)
    lo, hi = shift_window(k)
    shifts = np.linspace(lo, hi, candidates)

    def evaluate(t: float) -> float:
        grid = shift_grid(k, float(t))
        return energy_ratio(sampler, grid, p, samples, subgrid)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        ratios = list(executor.map(evaluate, shifts))

    best = min(ratios)
    chosen = next(i for i, r in enumerate(ratios) if r <= best * (1 + 1e-12))
    grid = shift_grid(k, float(shifts[chosen]))
    grid.ratio = ratios[chosen]
    logger.info(
        f"Level {k}: selected shift {shifts[chosen]:.6g} with ratio {ratios[chosen]:.6g}"
    )
    return grid, ratios[chosen]


def diagonal_grid(k: int, fraction: float = 0.0) -> GoodGrid:
    """Uniformly shifted grid at ``fraction`` of the admissible window."""
    lo, hi = shift_window(k)
    return shift_grid(k, lo + fraction * (hi - lo))


@dataclass
class ParentChildren:
    parent: Quad
    children: List[Quad]
    outer: Tuple[Point2, ...]
    points: List[Point2]
    sides: List[int] = field(default_factory=list)


def outer_boundary(grid_k1: GoodGrid, ix: int, iy: int) -> Tuple[Point2, ...]:
    """Eight-vertex boundary of the union of the four children of (ix, iy)."""
    x, y = 2 * ix, 2 * iy
    ring = [
        (x, y),
        (x + 1, y),
        (x + 2, y),
        (x + 2, y + 1),
        (x + 2, y + 2),
        (x + 1, y + 2),
        (x, y + 2),
        (x, y + 1),
    ]
    return tuple(grid_k1.vertex(a, b) for a, b in ring)


def parent_children(grid_k: GoodGrid, grid_k1: GoodGrid, j: int) -> ParentChildren:
    if grid_k1.level != grid_k.level + 1:
        msg = "Grids must be at consecutive levels"
        raise ValueError(msg)
    n = grid_k.size
    ix, iy = j % n, j // n
    parent = grid_k.quad(j)
    children = [
        grid_k1.quad((2 * iy + dy) * (2 * n) + 2 * ix + dx)
        for dy in (0, 1)
        for dx in (0, 1)
    ]
    outer = outer_boundary(grid_k1, ix, iy)

    points: List[Point2] = []
    sides: List[int] = []
    for side in range(4):
        edge = (parent[side], parent[(side + 1) % 4])
        for m in range(8):
            kind, point = segments_intersect(edge, (outer[m], outer[(m + 1) % 8]))
            if kind == IntersectionKind.OVERLAP:
                msg = f"Parent side {side} of cell {j} overlaps the children boundary"
                raise InvariantViolation(msg, {"cell": j, "side": side})
            if kind == IntersectionKind.DISJOINT or point is None:
                continue
            if all(distance(point, q) > 1e-15 for q in points):
                points.append(point)
                sides.append(side)

    if len(points) != 2:
        msg = f"Cell {j} at level {grid_k.level}: {len(points)} boundary intersections"
        raise InvariantViolation(msg, {"cell": j, "points": points})

    bound = grid_k.side * SEPARATION_FACTOR * (1 - 1e-9)
    for point in points:
        for vertex in parent + outer:
            if distance(point, vertex) < bound:
                msg = (
                    f"Intersection {point} of cell {j} is closer than "
                    f"{bound:.3g} to vertex {vertex}"
                )
                raise InvariantViolation(msg, {"cell": j, "point": point})
    return ParentChildren(parent, children, outer, points, sides)


@dataclass
class CubeBoundaryGrid:
    level: int
    vertices: np.ndarray
    faces: List[List[Tuple[int, int, int, int]]]
    to_sphere: bool = False

    @property
    def square_count(self) -> int:
        return sum(len(f) for f in self.faces)


# face: (fixed axis, fixed value, first in-plane axis, second in-plane axis)
# in-plane axes ordered so quads are counterclockwise seen from outside
# fmt: off
_CUBE_FACES = [
    (0, 0, 2, 1), (0, 1, 1, 2),
    (1, 0, 0, 2), (1, 1, 2, 0),
    (2, 0, 1, 0), (2, 1, 0, 1),
]
# fmt: on


def cube_boundary_grid(k: int, to_sphere: bool = False) -> CubeBoundaryGrid:
    _check_level(k)
    n = 1 << k
    index: Dict[Tuple[int, int, int], int] = {}
    coords: List[Point3] = []

    def vid(lattice_point: Tuple[int, int, int]) -> int:
        if lattice_point not in index:
            index[lattice_point] = len(coords)
            coords.append(tuple(c / n for c in lattice_point))  # type: ignore
        return index[lattice_point]

    faces: List[List[Tuple[int, int, int, int]]] = []
    for axis, value, u_axis, v_axis in _CUBE_FACES:
        quads = []
        for u, v in product(range(n), range(n)):
            corners = []
            for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                point = [0, 0, 0]
                point[axis] = value * n
                point[u_axis] = u + du
                point[v_axis] = v + dv
                corners.append(vid(tuple(point)))  # type: ignore
            quads.append(tuple(corners))
        faces.append(quads)  # type: ignore

    vertices = np.asarray(coords, dtype=float)
    if to_sphere:
        centered = vertices - 0.5
        vertices = centered / np.linalg.norm(centered, axis=1, keepdims=True)
    return CubeBoundaryGrid(k, vertices, faces, to_sphere)


def grid_family(
    sampler: Optional[GradientSampler],
    levels: Sequence[int],
    p: float = 2.0,
    candidates: int = DEFAULT_CANDIDATES,
    threads: Optional[int] = None,
) -> Dict[int, GoodGrid]:
    """Good grids for each level, uniform lower-window shift without a sampler."""
    result = {}
    for k in levels:
        if sampler is None:
            result[k] = diagonal_grid(k)
        else:
            result[k], _ = select_good_grid(sampler, k, p, candidates, threads=threads)
    return result
