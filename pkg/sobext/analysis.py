"""Energy sums, Gagliardo seminorm estimates and convergence verdicts."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import linregress

from .boundary_maps import BoundaryMap, image_boundary_lengths, image_diameters
from .defaults import CONVERGING_SLOPE, DEFAULT_SEED, DIVERGING_SLOPE
from .dyadic_grid import GoodGrid, grid_family, square_corners

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    CONVERGING = "Converging"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> Verdict:
        try:
            return cls(name.title())
        except ValueError:
            msg = f"'{name}' is not a valid Verdict"
            raise ValueError(msg)


def slope_verdict(slope: float) -> Verdict:
    if math.isnan(slope):
        return Verdict.INCONCLUSIVE
    if slope < CONVERGING_SLOPE:
        return Verdict.CONVERGING
    if slope > DIVERGING_SLOPE:
        return Verdict.DIVERGING
    return Verdict.INCONCLUSIVE


def log2_slope(levels: List[int], terms: List[float]) -> float:
    """Least squares slope of ``log2(term)`` over the last half of the levels."""
    window = max(2, math.ceil(len(levels) / 2))
    pairs = [(k, t) for k, t in zip(levels[-window:], terms[-window:]) if t > 0]
    if len(pairs) < 2:
        if terms and all(t == 0 for t in terms[-window:]):
            return -math.inf
        return math.nan
    ks, ts = zip(*pairs)
    return float(linregress(ks, np.log2(ts)).slope)


@dataclass
class EnergyReport:
    kind: str
    q: float
    levels: List[int]
    terms: List[float]
    p: Optional[float] = None

    @property
    def cumulative(self) -> List[float]:
        return [float(c) for c in np.cumsum(self.terms)]

    @property
    def total(self) -> float:
        return float(sum(self.terms))

    @property
    def slope(self) -> float:
        return log2_slope(self.levels, self.terms)

    @property
    def verdict(self) -> Verdict:
        return slope_verdict(self.slope)

    def rows(self) -> List[Tuple[int, float, float, float]]:
        slope = self.slope
        return [
            (k, t, c, slope) for k, t, c in zip(self.levels, self.terms, self.cumulative)
        ]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.q,
            "p": self.p,
            "levels": self.levels,
            "terms": self.terms,
            "cumulative": self.cumulative,
            "slope": self.slope,
            "verdict": str(self.verdict),
        }


def _check_levels(levels: int) -> None:
    if levels < 2:
        msg = f"At least 2 levels required, got {levels}"
        raise ValueError(msg)


def _check_q(q: float) -> None:
    if q < 1:
        msg = f"Exponent q must be at least 1, got {q}"
        raise ValueError(msg)


def diam_sum(phi: BoundaryMap, q: float, levels: int) -> EnergyReport:
    """Per level ``2^{k(q-3)}`` times the q-th powers of image diameters of standard squares."""
    _check_q(q)
    _check_levels(levels)
    terms = []
    for k in range(1, levels + 1):
        diameters = image_diameters(phi, square_corners(k))
        terms.append(float(2.0 ** (k * (q - 3)) * np.sum(diameters**q)))
        logger.debug(f"Diameter term at level {k}: {terms[-1]:.6g}")
    return EnergyReport("diam", q, list(range(1, levels + 1)), terms)


def length_sum(
    phi: BoundaryMap,
    q: float,
    levels: int,
    grids: Optional[Dict[int, GoodGrid]] = None,
    standard: bool = False,
    select: bool = False,
    p: float = 2.0,
    threads: Optional[int] = None,
) -> EnergyReport:
    """Per level ``2^{k(q-3)}`` times the q-th powers of image boundary lengths.

    Uses the given grid family, the standard squares with ``standard``, or a
    freshly built family (selected against ``phi`` with ``select``).
    """
    _check_q(q)
    _check_levels(levels)
    ks = list(range(1, levels + 1))
    if grids is None and not standard:
        grids = grid_family(phi if select else None, ks, p, threads=threads)
    terms = []
    for k in ks:
        corners = square_corners(k) if standard else grids[k].quad_array()
        lengths = image_boundary_lengths(phi, corners)
        terms.append(float(2.0 ** (k * (q - 3)) * np.sum(lengths**q)))
        logger.debug(f"Length term at level {k}: {terms[-1]:.6g}")
    return EnergyReport("length", q, ks, terms, p)


class SeminormMethod(str, Enum):
    NEIGHBOR_PAIR_DYADIC = "Neighbor-Pair-Dyadic"
    MONTE_CARLO = "Monte-Carlo"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> SeminormMethod:
        try:
            return cls(name.title())
        except ValueError:
            msg = f"'{name}' is not a valid SeminormMethod"
            raise ValueError(msg)


@dataclass
class SeminormEstimate:
    q: float
    value: float
    method: SeminormMethod
    error: float
    terms: List[float] = field(default_factory=list)
    evaluations: int = 0

    @property
    def levels(self) -> List[int]:
        return list(range(1, len(self.terms) + 1))

    @property
    def slope(self) -> float:
        return log2_slope(self.levels, self.terms)

    @property
    def verdict(self) -> Verdict:
        return slope_verdict(self.slope)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "value": self.value,
            "method": str(self.method),
            "error": self.error,
            "terms": self.terms,
            "evaluations": self.evaluations,
        }


# smallest sampled radius, far above the subnormal range
_TINY_RADIUS = 1e-300

PairFilter = Callable[[np.ndarray, np.ndarray], np.ndarray]

# offsets at which two squares are separated while their parents touch or coincide
_NEAR = [(a, b) for a in range(-3, 4) for b in range(-3, 4) if max(abs(a), abs(b)) >= 2]


def neighbor_pairs(k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Index pairs of level-k squares separated at level k but not at level k-1."""
    n = 1 << k
    iy, ix = np.divmod(np.arange(n * n), n)
    firsts, seconds = [], []
    for a, b in _NEAR:
        jx, jy = ix + a, iy + b
        inside = (jx >= 0) & (jx < n) & (jy >= 0) & (jy < n)
        parents = (np.abs(ix // 2 - jx // 2) <= 1) & (np.abs(iy // 2 - jy // 2) <= 1)
        keep = inside & parents
        firsts.append(iy[keep] * n + ix[keep])
        seconds.append(jy[keep] * n + jx[keep])
    return np.concatenate(firsts), np.concatenate(seconds)


def _pair_count(levels: int) -> int:
    return sum(len(neighbor_pairs(k)[0]) for k in range(1, levels + 1))


def _integrand(
    phi: BoundaryMap, x: np.ndarray, y: np.ndarray, q: float, swap: bool
) -> np.ndarray:
    if swap:
        x, y = y, x
    gap = np.linalg.norm(y - x, axis=1)
    return phi.difference(x, y - x) ** q / gap ** (q + 1)


def _level_term(
    phi: BoundaryMap, q: float, k: int, nodes: int, swap: bool
) -> Tuple[float, int]:
    n = 1 << k
    h = 1.0 / n
    firsts, seconds = neighbor_pairs(k)
    if firsts.size == 0:
        return 0.0, 0
    local = (np.arange(nodes) + 0.5) / nodes * h
    offsets = np.array([(u, v) for v in local for u in local])
    corner = np.stack([firsts % n, firsts // n], axis=1) * h
    other = np.stack([seconds % n, seconds // n], axis=1) * h
    x = (corner[:, None, None, :] + offsets[None, :, None, :]).reshape(-1, 2)
    y = (other[:, None, None, :] + offsets[None, None, :, :]).reshape(-1, 2)
    weight = (h / nodes) ** 4
    values = _integrand(phi, x, y, q, swap)
    return float(values.sum() * weight), len(values)


def _tail(terms: List[float]) -> float:
    if len(terms) < 2 or terms[-2] <= 0 or terms[-1] <= 0:
        return 0.0
    ratio = terms[-1] / terms[-2]
    if ratio >= 1:
        return math.inf
    return terms[-1] * ratio / (1 - ratio)


def _neighbor_pair_dyadic(
    phi: BoundaryMap,
    q: float,
    budget: int,
    levels: Optional[int],
    nodes: Optional[int],
    swap: bool,
    seed: int = DEFAULT_SEED,
) -> SeminormEstimate:
    if levels is None:
        levels = 2
        while _pair_count(levels + 1) <= budget:
            levels += 1
    if nodes is None:
        nodes = max(1, int((budget / max(1, _pair_count(levels))) ** 0.25))
    terms, evaluations = [], 0
    for k in range(1, levels + 1):
        term, count = _level_term(phi, q, k, nodes, swap)
        terms.append(term)
        evaluations += count
        logger.debug(f"Pair term at level {k}: {term:.6g} from {count} node pairs")
    h = 2.0**-levels
    scale = oscillation_scale(phi)
    if scale is not None and scale < h:
        # the map oscillates below the finest squares, sample what they leave out
        r_max = 2 * math.sqrt(2) * h
        near = _near_diagonal(levels)
        tail, error = _polar_estimate(
            phi, q, budget, seed, swap, smallest_scale(phi), r_max, near
        )
        evaluations += budget
        logger.debug(f"Near diagonal remainder below level {levels}: {tail:.6g}")
    else:
        tail = _tail(terms)
        error = tail
    value = sum(terms) + (tail if math.isfinite(tail) else 0.0)
    return SeminormEstimate(
        q, value, SeminormMethod.NEIGHBOR_PAIR_DYADIC, error, terms, evaluations
    )


def oscillation_scale(phi: BoundaryMap) -> Optional[float]:
    """Period of the finest oscillation of maps built from a frequency sequence."""
    sequence = getattr(phi, "sequence", None)
    depth = getattr(phi, "depth", None)
    if sequence and depth:
        return 10.0 ** -sequence[: int(depth)][-1]
    return None


def smallest_scale(phi: BoundaryMap) -> float:
    """Radius below which the map is resolved by its finest oscillation."""
    scale = oscillation_scale(phi)
    if scale is None:
        return 1e-6
    return max(scale / 100, _TINY_RADIUS)


def _near_diagonal(level: int) -> PairFilter:
    n = 1 << level

    def keep(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ix = np.minimum((x * n).astype(int), n - 1)
        iy = np.minimum((y * n).astype(int), n - 1)
        return np.abs(ix - iy).max(axis=1) <= 1

    return keep


def _log_mean(logs: np.ndarray) -> Tuple[float, float]:
    """Mean and standard error of samples given by their logarithms."""
    n = len(logs)
    if not np.isfinite(logs).any():
        return 0.0, 0.0
    log_first = logsumexp(logs) - math.log(n)
    log_second = logsumexp(2 * logs) - math.log(n)
    with np.errstate(over="ignore"):
        value = float(np.exp(log_first))
        ratio = float(np.expm1(max(0.0, log_second - 2 * log_first)))
    return value, value * math.sqrt(ratio / max(1, n - 1))


def _polar_estimate(
    phi: BoundaryMap,
    q: float,
    budget: int,
    seed: int,
    swap: bool,
    r_min: float,
    r_max: float,
    keep: Optional[PairFilter] = None,
) -> Tuple[float, float]:
    rng = np.random.default_rng(seed)
    span = math.log(r_max / r_min)
    x = rng.random((budget, 2))
    r = r_min * np.exp(rng.random(budget) * span)
    theta = rng.random(budget) * 2 * math.pi
    deltas = r[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    y = x + deltas
    inside = np.all((y >= 0) & (y <= 1), axis=1)
    if keep is not None:
        inside &= keep(x, y)
    logs = np.full(budget, -np.inf)
    if inside.any():
        # displacements stay exact, x + delta may round back onto x
        if swap:
            jump = phi.difference(y[inside], -deltas[inside])
        else:
            jump = phi.difference(x[inside], deltas[inside])
        # density of (r, theta) is 1 / (2 pi r span); area element r dr dtheta
        with np.errstate(divide="ignore"):
            logs[inside] = (
                q * np.log(jump)
                + (1 - q) * np.log(r[inside])
                + math.log(2 * math.pi * span)
            )
    invalid = np.isnan(logs)
    if invalid.any():
        logger.warning(f"Dropped {int(invalid.sum())} undefined seminorm samples")
        logs[invalid] = -np.inf
    return _log_mean(logs)


def _monte_carlo(
    phi: BoundaryMap, q: float, budget: int, seed: int, swap: bool
) -> SeminormEstimate:
    value, error = _polar_estimate(
        phi, q, budget, seed, swap, smallest_scale(phi), math.sqrt(2.0)
    )
    return SeminormEstimate(q, value, SeminormMethod.MONTE_CARLO, error, [], budget)


def gagliardo(
    phi: BoundaryMap,
    q: float,
    method: SeminormMethod = SeminormMethod.NEIGHBOR_PAIR_DYADIC,
    budget: int = 10**5,
    seed: int = DEFAULT_SEED,
    levels: Optional[int] = None,
    nodes: Optional[int] = None,
    swap: bool = False,
) -> SeminormEstimate:
    """Double integral of ``|phi(x) - phi(y)|^q / |x - y|^{q+1}`` over the unit square."""
    _check_q(q)
    if budget < 10**4:
        msg = f"Budget of at least 10^4 evaluations required, got {budget}"
        raise ValueError(msg)
    if method == SeminormMethod.MONTE_CARLO:
        estimate = _monte_carlo(phi, q, budget, seed, swap)
    else:
        estimate = _neighbor_pair_dyadic(phi, q, budget, levels, nodes, swap, seed)
    logger.info(
        f"Gagliardo q={q} ({estimate.method}): {estimate.value:.6g} ± {estimate.error:.3g}"
    )
    return estimate


@dataclass
class EquivalenceReport:
    diam: EnergyReport
    seminorm: SeminormEstimate

    @property
    def agree(self) -> bool:
        return self.diam.verdict == self.seminorm.verdict

    def to_dict(self) -> dict:
        return {
            "diam": self.diam.to_dict(),
            "gagliardo": self.seminorm.to_dict(),
            "gagliardo_slope": self.seminorm.slope,
            "gagliardo_verdict": str(self.seminorm.verdict),
            "agree": self.agree,
        }


def equivalence_check(
    phi: BoundaryMap, q: float, levels: int, budget: int = 10**6
) -> EquivalenceReport:
    """Convergence verdicts of the diameter sum and of the per-level pair terms."""
    if q <= 2:
        msg = f"Equivalence needs q > 2, got {q}"
        raise ValueError(msg)
    report = EquivalenceReport(
        diam_sum(phi, q, levels),
        gagliardo(phi, q, SeminormMethod.NEIGHBOR_PAIR_DYADIC, budget, levels=levels, nodes=1),
    )
    if not report.agree:
        logger.warning(
            f"Verdicts differ at q={q}: {report.diam.verdict} and {report.seminorm.verdict}"
        )
    return report


@dataclass
class DecayReport:
    report: EnergyReport
    predicted: float
    slack: float

    @property
    def ratios(self) -> List[float]:
        t = self.report.terms
        return [
            math.log2(b / a) if a > 0 and b > 0 else math.nan for a, b in zip(t, t[1:])
        ]

    @property
    def ok(self) -> bool:
        return self.report.slope <= self.predicted + self.slack

    def to_dict(self) -> dict:
        return {
            **self.report.to_dict(),
            "ratios": self.ratios,
            "predicted": self.predicted,
            "slack": self.slack,
            "ok": self.ok,
        }


def decay_check(
    phi: BoundaryMap,
    p: float,
    q: float,
    levels: int,
    grids: Optional[Dict[int, GoodGrid]] = None,
    slack: float = 0.5,
    threads: Optional[int] = None,
) -> DecayReport:
    """Length terms on selected grids against the slope ``-(3 - 2q/p)``."""
    if not q < 1.5 * p:
        msg = f"Decay needs q < 3p/2, got q={q}, p={p}"
        raise ValueError(msg)
    report = length_sum(phi, q, levels, grids, select=True, p=p, threads=threads)
    result = DecayReport(report, -(3 - 2 * q / p), slack)
    if not result.ok:
        logger.warning(
            f"Measured slope {report.slope:.3g} above predicted {result.predicted:.3g}"
        )
    return result


def adjugate(matrix: np.ndarray) -> np.ndarray:
    a0, a1, a2 = matrix
    return np.stack([np.cross(a1, a2), np.cross(a2, a0), np.cross(a0, a1)]).T


def kuhn_cube(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit cube split into ``n^3`` cubes of six positively oriented tetrahedra each."""
    xs = np.linspace(0.0, 1.0, n + 1)
    vertices = np.array([(x, y, z) for z in xs for y in xs for x in xs])

    def vid(ix: int, iy: int, iz: int) -> int:
        return (iz * (n + 1) + iy) * (n + 1) + ix

    # fmt: off
    perms = [((0, 1, 2), 1), ((0, 2, 1), -1), ((1, 0, 2), -1),
             ((1, 2, 0), 1), ((2, 0, 1), 1), ((2, 1, 0), -1)]
    # fmt: on
    tets = []
    for iz in range(n):
        for iy in range(n):
            for ix in range(n):
                for perm, sign in perms:
                    corner = [ix, iy, iz]
                    chain = [vid(*corner)]
                    for axis in perm:
                        corner[axis] += 1
                        chain.append(vid(*corner))
                    if sign < 0:
                        chain[1], chain[2] = chain[2], chain[1]
                    tets.append(chain)
    return vertices, np.asarray(tets)


def inner_distortion_identity(
    vertices: np.ndarray, tetrahedra: np.ndarray, images: np.ndarray
) -> Tuple[float, float]:
    """Conformal energy of a PL map and inner distortion integral of its inverse."""
    lhs = rhs = 0.0
    for index, tet in enumerate(tetrahedra):
        domain = (vertices[tet[1:]] - vertices[tet[0]]).T
        image = (images[tet[1:]] - images[tet[0]]).T
        differential = image @ np.linalg.inv(domain)
        jacobian = float(np.linalg.det(differential))
        if jacobian <= 0:
            msg = f"Tetrahedron {index} has nonpositive Jacobian {jacobian:.3g}"
            raise ValueError(msg)
        volume = abs(float(np.linalg.det(domain))) / 6
        lhs += np.linalg.norm(differential, ord=2) ** 3 * volume
        inverse = np.linalg.inv(differential)
        j_f = float(np.linalg.det(inverse))
        distortion = np.linalg.norm(adjugate(inverse), ord=2) ** 3 / j_f**2
        rhs += distortion * volume * jacobian
    return float(lhs), float(rhs)
