"""Homeomorphic extension over dyadic cells of the upper half cube.

Cell ``U_{k,j}`` is the standard square of level k times the heights
``[2^-k, 2^-(k-1)]``. Each horizontal slice is mapped into the plane of the
same height: above the cell middle by the shortest curve extension of the
boundary homotopy between the level k curve and the union of its children,
below it by shortest curve extensions of the four children whose inner edges
are deformed from the slice of the whole cell to the level k+1 edges.
"""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from .boundary_maps import BoundaryMap, image_diameters
from .defaults import (
    DEFAULT_LEVELS,
    DEFAULT_SEED,
    EDGE_SAMPLES,
    HOMOTOPY_CHECK_SAMPLES,
    NUDGE_DIAL,
    SLICE_SAMPLES,
)
from .diamond import PLArc, PLBoundaryMap, SquareChart
from .dyadic_grid import grid_family, square_corners
from .geodesic import ShortestCurveExtension
from .homotopy import (
    Cross,
    GridLevelHomotopy,
    HomotopyMode,
    build_t_fix,
    certify_cross,
    nudge_inward,
)
from .injectivizer import (
    blend_levels,
    modify_curves,
    separation_distance,
    square_mesh,
)
from .linearizer import EdgeKey, PLGrid, build_pl_grids
from .plgeom import Point2, PolyLine
from .sobext_error import ConstructionError

logger = logging.getLogger(__name__)

Point3 = Tuple[float, float, float]
CellId = Tuple[int, int]

# blend of whole and quarter extensions below the middle, then arm deformation
_BLEND_SHARE = 1 / 3
_SLICE_CACHE = 256


@dataclass(frozen=True)
class CubeCell:
    k: int
    j: int

    def __post_init__(self) -> None:
        if self.k < 1:
            msg = f"Level must be positive, got {self.k}"
            raise ValueError(msg)
        if not 0 <= self.j < 4**self.k:
            msg = f"Cell {self.j} does not exist at level {self.k}"
            raise ValueError(msg)

    @property
    def n(self) -> int:
        return 2**self.k

    @property
    def ix(self) -> int:
        return self.j % self.n

    @property
    def iy(self) -> int:
        return self.j // self.n

    @property
    def side(self) -> float:
        return 2.0**-self.k

    @property
    def top(self) -> float:
        return 2.0 ** -(self.k - 1)

    @property
    def bot(self) -> float:
        return self.side

    @property
    def mid(self) -> float:
        return self.side + self.side / 2

    @property
    def chart(self) -> SquareChart:
        return SquareChart((self.ix * self.side, self.iy * self.side), self.side)

    def contains(self, x: float, y: float, t: float) -> bool:
        return self.chart.contains((x, y)) and self.bot <= t <= self.top

    def children(self) -> List[CubeCell]:
        """Lower left, lower right, upper left and upper right children."""
        m = 2 * self.n
        ix, iy = 2 * self.ix, 2 * self.iy
        return [
            CubeCell(self.k + 1, (iy + dy) * m + ix + dx)
            for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1))
        ]

    def neighbours(self) -> List[CubeCell]:
        """Edge adjacent cells of the same level."""
        n = self.n
        return [
            CubeCell(self.k, (self.iy + dy) * n + self.ix + dx)
            for dx, dy in ((-1, 0), (1, 0), (0, -1), (0, 1))
            if 0 <= self.ix + dx < n and 0 <= self.iy + dy < n
        ]


def level_of(t: float) -> int:
    """Level whose height interval ``(2^-k, 2^-(k-1)]`` holds t."""
    if not 0 < t <= 1:
        msg = f"Height {t} outside (0, 1]"
        raise ValueError(msg)
    return math.floor(-math.log2(t)) + 1


def _arm_keys(cell: CubeCell) -> List[EdgeKey]:
    """Inner child edges: bottom, right, top and left arm of the center cross."""
    ix, iy = 2 * cell.ix, 2 * cell.iy
    return [
        ("v", ix + 1, iy),
        ("h", ix + 1, iy + 1),
        ("v", ix + 1, iy + 1),
        ("h", ix, iy + 1),
    ]


# bottom and left arms run towards the center
_TOWARDS_CENTER = (True, False, False, True)

Arms = List[PLArc]


@dataclass
class SliceMap:
    """Planar map of one horizontal section of a cell."""

    chart: SquareChart
    whole: Optional[ShortestCurveExtension] = None
    quarters: Optional[List[ShortestCurveExtension]] = None
    tau: float = 1.0

    def _quarter_value(self, point: Point2) -> Point2:
        cx, cy = self.chart.center
        index = (1 if point[0] > cx else 0) + (2 if point[1] > cy else 0)
        chart = self.chart.quarters()[index]
        return self.quarters[index].extend(chart.to_diamond(point))

    def __call__(self, point: Point2) -> Point2:
        if self.quarters is None:
            return self.whole.extend(self.chart.to_diamond(point))
        value = self._quarter_value(point)
        if self.whole is None or self.tau == 1.0:
            return value
        other = self.whole.extend(self.chart.to_diamond(point))
        return (
            (1 - self.tau) * other[0] + self.tau * value[0],
            (1 - self.tau) * other[1] + self.tau * value[1],
        )

    def boundaries(self) -> List[np.ndarray]:
        """Closed image curves bounding the slice pieces."""
        if self.quarters is None or self.tau < 1.0:
            return [self.whole.boundary.points]
        return [q.boundary.points for q in self.quarters]


class CylCell:
    """Slice machinery of one cell between its top and bottom faces."""

    def __init__(
        self,
        cell: CubeCell,
        homotopy: GridLevelHomotopy,
        injectivize: bool = False,
        samples: int = HOMOTOPY_CHECK_SAMPLES,
    ) -> None:
        if homotopy.coarse.level != cell.k:
            msg = f"Cell at level {cell.k} given a level {homotopy.coarse.level} homotopy"
            raise ValueError(msg)
        self.cell = cell
        self.homotopy = homotopy
        self.injectivize = injectivize
        self.samples = samples
        self._lock = threading.Lock()
        self._slices: Dict[float, SliceMap] = {}
        fine = homotopy.fine
        self.arm_keys = _arm_keys(cell)
        self.children = cell.children()
        self.top_map = homotopy.source(cell.j)
        self.bottom_map = homotopy.target(cell.j)
        self.child_maps = [fine.cell_map(c.j) for c in self.children]
        self.whole = self.extension(self.bottom_map)
        bot_arms = [fine.edges[key].arc() for key in self.arm_keys]
        self.route = self._choose_route(self._slice_arms(), bot_arms)
        self.blend_certified = self._certify_blend()
        logger.debug(
            f"Cell {cell.k},{cell.j}: {len(self.route)} arm phase(s), "
            f"blend certified {self.blend_certified}"
        )

    @property
    def top_curve(self) -> PolyLine:
        return self.homotopy.coarse.cell_curve(self.cell.j)

    def extension(self, boundary: PLBoundaryMap) -> ShortestCurveExtension:
        sce = ShortestCurveExtension(boundary)
        if self.injectivize:
            sce.modifier = modify_curves(sce)
        return sce

    def _slice_arms(self) -> Arms:
        """Arms traced by the whole bottom extension along the inner domain segments."""
        chart = self.cell.chart
        x0, y0 = chart.origin
        x1, y1 = x0 + chart.side, y0 + chart.side
        cx, cy = chart.center
        segments = [
            ((cx, y0), (cx, cy)),
            ((cx, cy), (x1, cy)),
            ((cx, cy), (cx, y1)),
            ((x0, cy), (cx, cy)),
        ]
        ws = np.linspace(0.0, 1.0, SLICE_SAMPLES + 1)
        arms = []
        for a, b in segments:
            points = [
                self.whole.extend(
                    chart.to_diamond((a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])))
                )
                for w in ws
            ]
            arms.append(PLArc(ws, np.asarray(points)))
        return arms

    def _cross(self, arms: Arms) -> Cross:
        outward = [
            arc.reversed().polyline() if inward else arc.polyline()
            for arc, inward in zip(arms, _TOWARDS_CENTER)
        ]
        return Cross(outward[0].start, outward)

    @staticmethod
    def _arcs(cross: Cross) -> Arms:
        arcs = [PLArc.constant_speed(arm) for arm in cross.arms]
        return [
            arc.reversed() if inward else arc for arc, inward in zip(arcs, _TOWARDS_CENTER)
        ]

    def quarter_maps(self, arms: Arms) -> List[PLBoundaryMap]:
        replaced = dict(zip(self.arm_keys, arms))
        fine = self.homotopy.fine
        maps = []
        for child in self.children:
            arcs = []
            for edge, rev in fine.cell_edges(child.j):
                arc = replaced[edge.key] if edge.key in replaced else edge.arc()
                arcs.append(arc.reversed() if rev else arc)
            maps.append(
                PLBoundaryMap.from_arcs((i / 4, (i + 1) / 4, arc) for i, arc in enumerate(arcs))
            )
        return maps

    def _check_arms(self, arms: Arms) -> None:
        corridor = self.bottom_map.target_polygon().to_shapely()
        certify_cross(self._cross(arms), corridor)
        for m, boundary in enumerate(self.quarter_maps(arms)):
            try:
                boundary.target_polygon()
            except ValueError as e:
                msg = f"Quarter {m}: {e}"
                raise ConstructionError(msg) from e

    def _certify(self, route: List[Tuple[Arms, Arms]]) -> None:
        for start, end in route:
            for nu in np.linspace(0.0, 1.0, self.samples):
                self._check_arms([PLArc.blend(a, b, float(nu)) for a, b in zip(start, end)])

    def _choose_route(self, mid_arms: Arms, bot_arms: Arms) -> List[Tuple[Arms, Arms]]:
        cell_id = (self.cell.k, self.cell.j)
        direct = [(mid_arms, bot_arms)]
        try:
            self._certify(direct)
            return direct
        except ConstructionError as e:
            logger.info(f"Cell {cell_id}: direct arm deformation rejected, {e.message}")
        polygon = self.bottom_map.target_polygon()
        clearance = NUDGE_DIAL * separation_distance(polygon) / 3
        try:
            t_mid = nudge_inward(self._cross(mid_arms), polygon, clearance)
            t_fix = build_t_fix(
                t_mid, self._cross(bot_arms), polygon, corner=self.bottom_map.eval_u(0.0)
            )
            route = [
                (self._arcs(t_mid), self._arcs(t_fix)),
                (self._arcs(t_fix), bot_arms),
            ]
            self._certify(route)
        except ConstructionError as e:
            if e.cell is not None:
                raise
            raise e.with_cell(cell_id) from e
        return route

    def _certify_blend(self, mesh: int = 8) -> bool:
        chart = self.cell.chart
        unit, triangles = square_mesh(mesh)
        points = np.asarray(chart.origin) + chart.side * unit
        quarters = SliceMap(chart, None, self.extensions_at(self.arms_at(_BLEND_SHARE)))
        whole = SliceMap(chart, self.whole)
        start = np.array([whole((float(x), float(y))) for x, y in points])
        end = np.array([quarters((float(x), float(y))) for x, y in points])
        try:
            for tau in np.linspace(0.0, 1.0, 5):
                blend_levels(points, triangles, start, end, float(tau))
        except ConstructionError as e:
            logger.warning(f"Cell {self.cell.k},{self.cell.j}: {e.message}")
            return False
        return True

    def arms_at(self, mu: float) -> Arms:
        """Inner arms at depth ``mu`` of the lower half, from the slice arms (1/3) to the edges (1)."""
        if mu <= _BLEND_SHARE:
            return self.route[0][0]
        if mu >= 1.0:
            return self.route[-1][1]
        position = (mu - _BLEND_SHARE) / (1 - _BLEND_SHARE) * len(self.route)
        index = min(int(position), len(self.route) - 1)
        nu = position - index
        start, end = self.route[index]
        if nu == 0.0:
            return start
        return [PLArc.blend(a, b, nu) for a, b in zip(start, end)]

    def extensions_at(self, arms: Arms) -> List[ShortestCurveExtension]:
        return [self.extension(b) for b in self.quarter_maps(arms)]

    def boundary_at(self, t: float) -> PLBoundaryMap:
        """Outer boundary of the slice at height t."""
        cell = self.cell
        if t >= cell.mid:
            return self.homotopy.cell_map(cell.j, (cell.top - t) / (cell.top - cell.mid))
        return self.bottom_map

    def slice(self, t: float) -> SliceMap:
        cell = self.cell
        if not cell.bot <= t <= cell.top:
            msg = f"Height {t} outside cell {cell.k},{cell.j}"
            raise ValueError(msg)
        with self._lock:
            cached = self._slices.get(t)
        if cached is not None:
            return cached
        if t >= cell.mid:
            try:
                boundary = self.boundary_at(t)
            except ConstructionError as e:
                if e.cell is not None:
                    raise
                raise e.with_cell((cell.k, cell.j)) from e
            result = SliceMap(cell.chart, self.extension(boundary))
        else:
            mu = (cell.mid - t) / (cell.mid - cell.bot)
            quarters = self.extensions_at(self.arms_at(mu))
            tau = min(1.0, mu / _BLEND_SHARE)
            result = SliceMap(cell.chart, self.whole if tau < 1 else None, quarters, tau)
        with self._lock:
            if len(self._slices) >= _SLICE_CACHE:
                self._slices.clear()
            result = self._slices.setdefault(t, result)
        return result


class ExtensionField:
    """The extension over all built levels, evaluated lazily cell by cell."""

    def __init__(
        self,
        pl_grids: Dict[int, PLGrid],
        mode: HomotopyMode = HomotopyMode.AUTO,
        injectivize: bool = False,
        phi: Optional[BoundaryMap] = None,
    ) -> None:
        levels = sorted(pl_grids)
        if len(levels) < 2 or levels[0] != 1 or levels != list(range(1, levels[-1] + 1)):
            msg = f"Need PL grids for levels 1..K+1, got {levels}"
            raise ValueError(msg)
        self.pl_grids = pl_grids
        self.levels = levels[-1] - 1
        self.injectivize = injectivize
        self.phi = phi
        self.homotopies = {
            k: GridLevelHomotopy(pl_grids[k], pl_grids[k + 1], mode)
            for k in range(1, self.levels + 1)
        }
        self._cells: Dict[CellId, CylCell] = {}
        self._lock = threading.Lock()

    @classmethod
    def build(
        cls,
        phi: BoundaryMap,
        levels: int = DEFAULT_LEVELS,
        p: float = 2.0,
        select_grids: bool = True,
        mode: HomotopyMode = HomotopyMode.AUTO,
        injectivize: bool = False,
        threads: Optional[int] = None,
        samples: int = EDGE_SAMPLES,
    ) -> ExtensionField:
        if levels < 1:
            msg = f"At least one level required, got {levels}"
            raise ValueError(msg)
        grids = grid_family(
            phi if select_grids else None, range(1, levels + 2), p, threads=threads
        )
        pl_grids = build_pl_grids(phi, grids, threads, samples)
        logger.info(f"PL grids ready for levels 1..{levels + 1}")
        return cls(pl_grids, mode, injectivize, phi)

    @property
    def depth(self) -> float:
        return 2.0**-self.levels

    def build_cell(self, k: int, j: int) -> CylCell:
        if not 1 <= k <= self.levels:
            msg = f"Level {k} is not built, levels 1..{self.levels} available"
            raise ConstructionError(msg, (k, j))
        with self._lock:
            cached = self._cells.get((k, j))
        if cached is not None:
            return cached
        cube = CubeCell(k, j)
        try:
            cell = CylCell(cube, self.homotopies[k], self.injectivize)
        except ConstructionError as e:
            if e.cell is not None:
                raise
            raise e.with_cell((k, j)) from e
        except ValueError as e:
            raise ConstructionError(str(e), (k, j)) from e
        with self._lock:
            return self._cells.setdefault((k, j), cell)

    def build_all(self, threads: Optional[int] = None) -> List[CylCell]:
        ids = [(k, j) for k in range(1, self.levels + 1) for j in range(4**k)]
        with ThreadPoolExecutor(max_workers=threads) as executor:
            cells = list(executor.map(lambda c: self.build_cell(*c), ids))
        logger.info(f"Built {len(cells)} cells")
        return cells

    def locate(self, x: float, y: float, t: float) -> CubeCell:
        if not (0 <= x <= 1 and 0 <= y <= 1):
            msg = f"({x}, {y}) is outside the unit square"
            raise ValueError(msg)
        k = level_of(t)
        if k > self.levels:
            if t < self.depth:
                msg = f"Height {t} below the built depth {self.depth}"
                raise ConstructionError(msg)
            k = self.levels
        n = 2**k
        ix, iy = min(int(x * n), n - 1), min(int(y * n), n - 1)
        return CubeCell(k, iy * n + ix)

    def eval_in(self, cell: CubeCell, x: float, y: float, t: float) -> Point3:
        """Value computed from the slice machinery of a given cell."""
        hx, hy = self.build_cell(cell.k, cell.j).slice(t)((x, y))
        return (hx, hy, t)

    def eval(self, x: float, y: float, t: float) -> Point3:  # noqa: A003
        return self.eval_in(self.locate(x, y, t), x, y, t)

    def slice_boundaries(self, t: float) -> List[np.ndarray]:
        """Closed image curves of every cell slice at height t, lifted to height t."""
        k = self.locate(0.0, 0.0, t).k
        curves = []
        for j in range(4**k):
            for ring in self.build_cell(k, j).slice(t).boundaries():
                lifted = np.column_stack([ring, np.full(len(ring), t)])
                curves.append(np.vstack([lifted, lifted[:1]]))
        return curves

    def lattice(self, resolution: int, heights: Sequence[float]) -> dict:
        """Values at the ``resolution``-by-``resolution`` lattice of each height."""
        xs = np.linspace(0.0, 1.0, resolution)
        rows = []
        for t in heights:
            for y in xs:
                for x in xs:
                    hx, hy, _ = self.eval(float(x), float(y), float(t))
                    rows.append([float(x), float(y), float(t), hx, hy])
        return {"resolution": resolution, "points": rows}


def operator_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, ord=2))


def differential(field_: ExtensionField, cell: CubeCell, z: Sequence[float]) -> np.ndarray:
    """Central difference matrix of h at z with step ``2^-k / 64``."""
    step = cell.side / 64
    columns = []
    for axis in range(3):
        plus, minus = list(z), list(z)
        plus[axis] += step
        minus[axis] -= step
        a = np.asarray(field_.eval_in(cell, *plus))
        b = np.asarray(field_.eval_in(cell, *minus))
        columns.append((a - b) / (2 * step))
    return np.column_stack(columns)


def cell_energy(field_: ExtensionField, cell: CubeCell, q: float, resolution: int) -> float:
    h = cell.side / resolution
    x0, y0 = cell.chart.origin
    offsets = (np.arange(resolution) + 0.5) * h
    total = 0.0
    for t in cell.bot + offsets:
        for y in y0 + offsets:
            for x in x0 + offsets:
                norm = operator_norm(differential(field_, cell, (x, y, t)))
                total += norm**q
    return total * h**3


@dataclass
class EnergyEstimate:
    q: float
    resolution: int
    per_cell: Dict[CellId, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.per_cell.values())

    def per_level(self) -> Dict[int, float]:
        levels: Dict[int, float] = {}
        for (k, _), value in self.per_cell.items():
            levels[k] = levels.get(k, 0.0) + value
        return levels

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "resolution": self.resolution,
            "total": self.total,
            "per_level": {str(k): v for k, v in self.per_level().items()},
            "per_cell": [[k, j, v] for (k, j), v in sorted(self.per_cell.items())],
        }


def energy_estimate(
    field_: ExtensionField,
    q: float,
    resolution: int = 8,
    cells: Optional[Sequence[CellId]] = None,
    threads: Optional[int] = None,
) -> EnergyEstimate:
    """Midpoint rule for the integral of ``|Dh|^q`` over built cells."""
    if q < 1:
        msg = f"Exponent q must be at least 1, got {q}"
        raise ValueError(msg)
    if resolution < 8:
        msg = f"At least 8 samples per cell edge required, got {resolution}"
        raise ValueError(msg)
    if cells is None:
        cells = [(k, j) for k in range(1, field_.levels + 1) for j in range(4**k)]

    def evaluate(cell_id: CellId) -> float:
        value = cell_energy(field_, CubeCell(*cell_id), q, resolution)
        logger.debug(f"Cell {cell_id}: energy {value:.6g}")
        return value

    with ThreadPoolExecutor(max_workers=threads) as executor:
        values = list(executor.map(evaluate, cells))
    estimate = EnergyEstimate(q, resolution, dict(zip(cells, values)))
    logger.info(f"Energy estimate q={q}: total {estimate.total:.6g}")
    return estimate


def goal_quantity(field_: ExtensionField, cell: CubeCell) -> float:
    """Length of the top curve plus the lengths of the four child curves."""
    coarse = field_.pl_grids[cell.k]
    fine = field_.pl_grids[cell.k + 1]
    return coarse.cell_length(cell.j) + sum(fine.cell_length(c.j) for c in cell.children())


def lipschitz_in_cell(
    field_: ExtensionField, cell: CubeCell, pairs: int = 200, seed: int = DEFAULT_SEED
) -> float:
    """Largest difference quotient over random nearby pairs in the cell."""
    rng = np.random.default_rng(seed)
    lo = np.array([*cell.chart.origin, cell.bot])
    hi = lo + cell.side
    worst = 0.0
    for _ in range(pairs):
        a = lo + rng.random(3) * cell.side
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        radius = cell.side * 2.0 ** rng.uniform(-8, -1)
        b = np.clip(a + radius * direction, lo, hi)
        gap = float(np.linalg.norm(b - a))
        if gap == 0:
            continue
        ha = np.asarray(field_.eval_in(cell, *map(float, a)))
        hb = np.asarray(field_.eval_in(cell, *map(float, b)))
        worst = max(worst, float(np.linalg.norm(ha - hb)) / gap)
    return worst


@dataclass
class GoalRatio:
    k: int
    j: int
    lipschitz: float
    own: float
    with_neighbours: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "j": self.j,
            "lipschitz": self.lipschitz,
            "own": self.own,
            "with_neighbours": self.with_neighbours,
        }


def goal_check(
    field_: ExtensionField, k: int, j: int, pairs: int = 200, seed: int = DEFAULT_SEED
) -> GoalRatio:
    """Empirical Lipschitz constant against ``2^k`` times the cell curve lengths."""
    cell = CubeCell(k, j)
    field_.build_cell(k, j)
    lipschitz = lipschitz_in_cell(field_, cell, pairs, seed)
    own = goal_quantity(field_, cell)
    around = own + sum(goal_quantity(field_, c) for c in cell.neighbours())
    scale = 2.0**k
    return GoalRatio(k, j, lipschitz, lipschitz / (scale * own), lipschitz / (scale * around))


@dataclass
class TraceCheck:
    k: int
    error: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.error <= self.bound


def trace_error(field_: ExtensionField, k: int) -> TraceCheck:
    """Distance of the top slice of level k from the boundary map at grid vertices."""
    if field_.phi is None:
        msg = "Trace check needs the boundary map"
        raise ValueError(msg)
    n = 2**k
    top = 2.0 ** -(k - 1)
    vertices = np.array([(ix / n, iy / n) for iy in range(n + 1) for ix in range(n + 1)])
    images = field_.phi.eval_many(vertices)
    error = 0.0
    for (x, y), target in zip(vertices, images):
        cell = CubeCell(k, min(int(y * n), n - 1) * n + min(int(x * n), n - 1))
        hx, hy, _ = field_.eval_in(cell, float(x), float(y), top)
        error = max(error, math.hypot(hx - target[0], hy - target[1]))
    bound = float(image_diameters(field_.phi, square_corners(k)).max())
    return TraceCheck(k, error, bound)


def slice_collisions(
    field_: ExtensionField, k: int, j: int, grid: int = 33, slices: int = 17
) -> int:
    """Number of sampled point pairs with coinciding images on common slices."""
    cell = CubeCell(k, j)
    x0, y0 = cell.chart.origin
    xs = x0 + np.linspace(0.0, cell.side, grid)
    ys = y0 + np.linspace(0.0, cell.side, grid)
    collisions = 0
    for t in np.linspace(cell.bot, cell.top, slices):
        slice_map = field_.build_cell(k, j).slice(float(t))
        images = np.array([slice_map((float(x), float(y))) for y in ys for x in xs])
        collisions += int((pdist(images) < 1e-12).sum())
    return collisions
