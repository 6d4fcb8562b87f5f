from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist

from .defaults import CANTOR_DEPTH, SMOOTH_SHEAR_AMPLITUDE
from .dyadic_grid import Box, DyadicSquare
from .plgeom import Point2

logger = logging.getLogger(__name__)

Cell = Union[DyadicSquare, Sequence[Point2], np.ndarray]


class MapVariant(str, Enum):
    IDENTITY = "Identity"
    AFFINE = "Affine"
    SAW_SHEAR = "Saw-Shear"
    RADIAL_POWER = "Radial-Power"
    CANTOR_SHEAR = "Cantor-Shear"
    SMOOTH_SHEAR = "Smooth-Shear"
    SAMPLED = "Sampled"
    CONJUGATED = "Conjugated"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> MapVariant:
        aliases = {"saw": "saw-shear", "radial": "radial-power", "cantor": "cantor-shear"}
        if isinstance(name, str):
            key = aliases.get(name.lower(), name).replace("_", "-")
            try:
                return MapVariant(key.title())
            except ValueError:
                pass
        msg = f"'{name}' is not a valid MapVariant"
        raise ValueError(msg)


def _operator_norm_2x2(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray):
    # largest singular value of [[a, b], [c, d]]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))))


class BoundaryMap(ABC):
    """Homeomorphism of a planar square onto a Jordan domain."""

    variant: ClassVar[MapVariant]
    domain: Optional[Box] = None
    is_affine: ClassVar[bool] = False

    def check_domain(self, points: np.ndarray) -> None:
        if self.domain is None:
            return
        (x0, y0), (x1, y1) = self.domain
        slack = 1e-12
        outside = (
            (points[:, 0] < x0 - slack)
            | (points[:, 0] > x1 + slack)
            | (points[:, 1] < y0 - slack)
            | (points[:, 1] > y1 + slack)
        )
        if outside.any():
            bad = points[np.argmax(outside)]
            msg = f"Point ({bad[0]}, {bad[1]}) outside the {self.variant} map domain"
            raise ValueError(msg)

    def eval(self, x: Point2) -> Point2:
        points = np.asarray([x], dtype=float)
        self.check_domain(points)
        y = self._eval(points)[0]
        return (float(y[0]), float(y[1]))

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.check_domain(points)
        return self._eval(points)

    @abstractmethod
    def _eval(self, points: np.ndarray) -> np.ndarray: ...

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        """Operator norm of Dφ, central differences unless overridden."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        h = 1e-6
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        dx = (self._eval(points + ex) - self._eval(points - ex)) / (2 * h)
        dy = (self._eval(points + ey) - self._eval(points - ey)) / (2 * h)
        return _operator_norm_2x2(dx[:, 0], dy[:, 0], dx[:, 1], dy[:, 1])

    def difference(self, points: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """``|φ(x + δ) − φ(x)|`` for paired rows of ``points`` and ``deltas``."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        deltas = np.asarray(deltas, dtype=float).reshape(-1, 2)
        return np.linalg.norm(self._eval(points + deltas) - self._eval(points), axis=1)

    def exact_cell_length(self, corners: np.ndarray) -> Optional[np.ndarray]:
        """Closed form image boundary lengths of quads, when known."""
        if self.is_affine:
            image = self._eval(corners.reshape(-1, 2)).reshape(corners.shape)
            return np.linalg.norm(image - np.roll(image, -1, axis=1), axis=2).sum(axis=1)
        return None

    def exact_cell_diameter(self, corners: np.ndarray) -> Optional[np.ndarray]:
        if self.is_affine:
            image = self._eval(corners.reshape(-1, 2)).reshape(corners.shape)
            diff = image[:, :, None, :] - image[:, None, :, :]
            return np.sqrt((diff**2).sum(axis=3)).max(axis=(1, 2))
        return None

    @property
    def holder_exponent(self) -> Optional[float]:
        return None

    def params(self) -> Dict[str, Any]:
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": str(self.variant), **self.params()}


class IdentityMap(BoundaryMap):
    variant = MapVariant.IDENTITY
    is_affine = True

    def _eval(self, points: np.ndarray) -> np.ndarray:
        return points.copy()

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        return np.ones(np.asarray(points).reshape(-1, 2).shape[0])


@dataclass
class AffineMap(BoundaryMap):
    matrix: Tuple[Tuple[float, float], Tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    offset: Tuple[float, float] = (0.0, 0.0)

    variant = MapVariant.AFFINE
    is_affine = True

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2) or abs(np.linalg.det(m)) < 1e-15:
            msg = "Affine map needs an invertible 2x2 matrix"
            raise ValueError(msg)
        self._m = m
        self._b = np.asarray(self.offset, dtype=float)

    def _eval(self, points: np.ndarray) -> np.ndarray:
        return points @ self._m.T + self._b

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(self._m, 2))
        return np.full(np.asarray(points).reshape(-1, 2).shape[0], norm)

    def inverse(self) -> AffineMap:
        inv = np.linalg.inv(self._m)
        return AffineMap(
            tuple(map(tuple, inv)), tuple(-(inv @ self._b))  # type: ignore
        )

    def params(self) -> Dict[str, Any]:
        return {"matrix": self._m.tolist(), "offset": self._b.tolist()}


def _saw(t: Fraction) -> Fraction:
    frac = t - math.floor(t)
    return 2 * frac if frac <= Fraction(1, 2) else 2 - 2 * frac


def saw_sequence(q: float, depth: int) -> List[int]:
    """Smallest increasing integers satisfying both growth conditions at each step."""
    sequence: List[int] = []
    for k in range(1, depth + 1):
        first = 2 * (k * q + k * math.log10(2)) / (q - 1)
        bound = max(first, (sequence[-1] + 1) if sequence else 1)
        if sequence:
            total = sum(2 * 10.0 ** (n - j) for j, n in enumerate(sequence, start=1))
            bound = max(bound, 2 * math.log10(8 * 10.0**k * total))
        n = max(math.ceil(bound - 1e-12), (sequence[-1] + 1) if sequence else 1)
        sequence.append(int(n))
    return sequence


@dataclass
class SawShear(BoundaryMap):
    q: float = 2.0
    depth: int = 4
    sequence: List[int] = field(default_factory=list)

    variant = MapVariant.SAW_SHEAR

    def __post_init__(self) -> None:
        if self.q <= 1:
            msg = f"Saw shear exponent must exceed 1, got {self.q}"
            raise ValueError(msg)
        if self.depth < 1:
            msg = f"Saw shear depth must be positive, got {self.depth}"
            raise ValueError(msg)
        if not self.sequence:
            self.sequence = saw_sequence(self.q, self.depth)

    def shear(self, x1: Fraction) -> Fraction:
        return sum(
            (Fraction(1, 10**j) * _saw(x1 * 10**n) for j, n in self.terms()),
            Fraction(0),
        )

    def terms(self) -> List[Tuple[int, int]]:
        return list(enumerate(self.sequence[: self.depth], start=1))

    def _eval(self, points: np.ndarray) -> np.ndarray:
        out = points.copy()
        for i, x1 in enumerate(points[:, 0]):
            out[i, 1] = points[i, 1] + float(self.shear(Fraction(float(x1))))
        return out

    def difference(self, points: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        deltas = np.asarray(deltas, dtype=float).reshape(-1, 2)
        result = np.empty(len(points))
        for i, ((x1, _), (d1, d2)) in enumerate(zip(points, deltas)):
            a = Fraction(float(x1))
            jump = self.shear(a + Fraction(float(d1))) - self.shear(a)
            result[i] = math.hypot(d1, float(Fraction(float(d2)) + jump))
        return result

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        result = np.empty(len(points))
        for i, x1 in enumerate(points[:, 0]):
            slope = 0.0
            for j, n in self.terms():
                phase = Fraction(float(x1)) * 10**n
                frac = phase - math.floor(phase)
                sign = 1.0 if frac < Fraction(1, 2) else -1.0
                slope += sign * 2.0 * 10.0 ** (n - j)
            result[i] = float(_operator_norm_2x2(1.0, 0.0, slope, 1.0))
        return result

    def params(self) -> Dict[str, Any]:
        return {"q": self.q, "depth": self.depth, "sequence": list(self.sequence)}


@dataclass
class RadialPower(BoundaryMap):
    """``x ↦ x|x|^(α−1)`` on the disk, or its conjugate by ``x ↦ 2x − 1``."""

    alpha: float = 0.5
    presentation: str = "disk"

    variant = MapVariant.RADIAL_POWER

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            msg = f"Radial power exponent must lie in (0, 1), got {self.alpha}"
            raise ValueError(msg)
        if self.presentation not in ("disk", "square"):
            msg = f"'{self.presentation}' is not a valid presentation"
            raise ValueError(msg)

    def _radial(self, y: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(y, axis=1, keepdims=True)
        scale = np.where(r > 0, np.power(np.where(r > 0, r, 1.0), self.alpha - 1), 0)
        return y * scale

    def _eval(self, points: np.ndarray) -> np.ndarray:
        if self.presentation == "disk":
            return self._radial(points)
        return (self._radial(2 * points - 1) + 1) / 2

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        y = points if self.presentation == "disk" else 2 * points - 1
        r = np.linalg.norm(y, axis=1)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.power(r, self.alpha - 1), np.inf)

    @property
    def holder_exponent(self) -> float:
        return self.alpha

    def params(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "presentation": self.presentation}


def cantor_ratio(k: float) -> float:
    return (1 - 1 / k) / 2


def cantor_function(x: np.ndarray, k: float = 3, depth: int = CANTOR_DEPTH):
    """Piecewise linear ``depth``-th approximant of the 1/k Cantor function.

    Extended by 0 below 0 and by 1 above 1.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    r = cantor_ratio(k)
    value = np.zeros_like(x)
    weight = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(depth):
        left = active & (x < r)
        right = active & (x > 1 - r)
        middle = active & ~left & ~right
        value = np.where(middle, value + weight / 2, value)
        value = np.where(right, value + weight / 2, value)
        x = np.where(left, x / r, np.where(right, (x - (1 - r)) / r, x))
        weight = np.where(left | right, weight / 2, weight)
        active = left | right
    return np.where(active, value + weight * x, value)


@dataclass
class CantorShear(BoundaryMap):
    k: float = 3
    depth: int = CANTOR_DEPTH

    variant = MapVariant.CANTOR_SHEAR

    def __post_init__(self) -> None:
        if self.k < 2:
            msg = f"Cantor ratio parameter must be at least 2, got {self.k}"
            raise ValueError(msg)

    def g(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) + cantor_function(x, self.k, self.depth)

    def _eval(self, points: np.ndarray) -> np.ndarray:
        return np.stack([self.g(points[:, 0]), points[:, 1]], axis=1)

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        # the absolutely continuous part of g' equals 1 almost everywhere
        return np.ones(np.asarray(points).reshape(-1, 2).shape[0])

    def _rectangles(self, corners: np.ndarray):
        xs, ys = corners[:, :, 0], corners[:, :, 1]
        aligned = np.allclose(xs[:, 0], xs[:, 3]) and np.allclose(xs[:, 1], xs[:, 2])
        aligned = aligned and np.allclose(ys[:, 0], ys[:, 1])
        if not aligned or not np.allclose(ys[:, 2], ys[:, 3]):
            return None
        width = self.g(xs[:, 1]) - self.g(xs[:, 0])
        height = ys[:, 2] - ys[:, 1]
        return width, height

    def exact_cell_length(self, corners: np.ndarray) -> Optional[np.ndarray]:
        rect = self._rectangles(corners)
        if rect is None:
            return None
        width, height = rect
        return 2 * width + 2 * height

    def exact_cell_diameter(self, corners: np.ndarray) -> Optional[np.ndarray]:
        rect = self._rectangles(corners)
        if rect is None:
            return None
        width, height = rect
        return np.hypot(width, height)

    @property
    def holder_exponent(self) -> float:
        return math.log(0.5) / math.log(cantor_ratio(self.k))

    def params(self) -> Dict[str, Any]:
        return {"k": self.k, "depth": self.depth}


@dataclass
class SmoothShear(BoundaryMap):
    amplitude: float = SMOOTH_SHEAR_AMPLITUDE

    variant = MapVariant.SMOOTH_SHEAR

    def __post_init__(self) -> None:
        if not 0 <= self.amplitude < 1 / math.pi:
            msg = f"Shear amplitude must lie in [0, 1/π), got {self.amplitude}"
            raise ValueError(msg)

    def _eval(self, points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        shear = self.amplitude * np.sin(np.pi * x) * np.sin(np.pi * y)
        return np.stack([x + shear, y], axis=1)

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = points[:, 0], points[:, 1]
        a = self.amplitude * np.pi
        return _operator_norm_2x2(
            1 + a * np.cos(np.pi * x) * np.sin(np.pi * y),
            a * np.sin(np.pi * x) * np.cos(np.pi * y),
            np.zeros_like(x),
            np.ones_like(x),
        )

    def params(self) -> Dict[str, Any]:
        return {"amplitude": self.amplitude}


class SampledMap(BoundaryMap):
    """Bilinear interpolation of vertex images on a regular grid over ``domain``."""

    variant = MapVariant.SAMPLED

    def __init__(
        self,
        resolution: int,
        vertex_images: Sequence[Sequence[float]],
        domain: Box = ((0.0, 0.0), (1.0, 1.0)),
    ) -> None:
        images = np.asarray(vertex_images, dtype=float)
        if resolution < 1 or images.shape != ((resolution + 1) ** 2, 2):
            msg = (
                f"Sampled map of resolution {resolution} needs "
                f"{(resolution + 1) ** 2} vertex images"
            )
            raise ValueError(msg)
        if len({tuple(p) for p in images.tolist()}) != len(images):
            msg = "Images of distinct grid vertices must be distinct"
            raise ValueError(msg)
        self.resolution = resolution
        self.images = images.reshape(resolution + 1, resolution + 1, 2)
        self.domain = (tuple(domain[0]), tuple(domain[1]))  # type: ignore

    def _local(self, points: np.ndarray):
        (x0, y0), (x1, y1) = self.domain  # type: ignore
        n = self.resolution
        u = (points[:, 0] - x0) / (x1 - x0) * n
        v = (points[:, 1] - y0) / (y1 - y0) * n
        i = np.clip(np.floor(u).astype(int), 0, n - 1)
        j = np.clip(np.floor(v).astype(int), 0, n - 1)
        return i, j, u - i, v - j

    def _eval(self, points: np.ndarray) -> np.ndarray:
        i, j, s, t = self._local(points)
        img = self.images  # indexed [row j][column i]
        s, t = s[:, None], t[:, None]
        return (
            (1 - s) * (1 - t) * img[j, i]
            + s * (1 - t) * img[j, i + 1]
            + s * t * img[j + 1, i + 1]
            + (1 - s) * t * img[j + 1, i]
        )

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        i, j, s, t = self._local(points)
        img = self.images
        (x0, y0), (x1, y1) = self.domain  # type: ignore
        su = self.resolution / (x1 - x0)
        sv = self.resolution / (y1 - y0)
        s, t = s[:, None], t[:, None]
        du = ((1 - t) * (img[j, i + 1] - img[j, i]) + t * (img[j + 1, i + 1] - img[j + 1, i])) * su
        dv = ((1 - s) * (img[j + 1, i] - img[j, i]) + s * (img[j + 1, i + 1] - img[j, i + 1])) * sv
        return _operator_norm_2x2(du[:, 0], dv[:, 0], du[:, 1], dv[:, 1])

    def params(self) -> Dict[str, Any]:
        return {
            "resolution": self.resolution,
            "vertex_images": self.images.reshape(-1, 2).tolist(),
            "domain": [list(self.domain[0]), list(self.domain[1])],  # type: ignore
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SampledMap:
        domain = data.get("domain", ((0.0, 0.0), (1.0, 1.0)))
        return cls(int(data["resolution"]), data["vertex_images"], domain)

    @classmethod
    def from_map(
        cls, phi: BoundaryMap, resolution: int, domain: Box = ((0.0, 0.0), (1.0, 1.0))
    ) -> SampledMap:
        (x0, y0), (x1, y1) = domain
        xs = np.linspace(x0, x1, resolution + 1)
        ys = np.linspace(y0, y1, resolution + 1)
        grid = np.array([[x, y] for y in ys for x in xs])
        return cls(resolution, phi.eval_many(grid), domain)


class Conjugated(BoundaryMap):
    """``post ∘ inner ∘ pre`` for affine changes of variables."""

    variant = MapVariant.CONJUGATED

    def __init__(self, inner: BoundaryMap, pre: AffineMap, post: AffineMap) -> None:
        self.inner = inner
        self.pre = pre
        self.post = post
        self.domain = None

    def _eval(self, points: np.ndarray) -> np.ndarray:
        return self.post._eval(self.inner._eval(self.pre._eval(points)))

    def gradient_norm(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        scale = float(np.linalg.norm(self.pre._m, 2) * np.linalg.norm(self.post._m, 2))
        return scale * self.inner.gradient_norm(self.pre._eval(points))

    def params(self) -> Dict[str, Any]:
        return {
            "inner": self.inner.to_dict(),
            "pre": self.pre.params(),
            "post": self.post.params(),
        }


def make_map(variant: Union[str, MapVariant], **params: Any) -> BoundaryMap:
    variant = variant if isinstance(variant, MapVariant) else MapVariant.get(variant)
    if variant == MapVariant.IDENTITY:
        return IdentityMap()
    if variant == MapVariant.AFFINE:
        return AffineMap(**params)
    if variant == MapVariant.SAW_SHEAR:
        return SawShear(**params)
    if variant == MapVariant.RADIAL_POWER:
        return RadialPower(**params)
    if variant == MapVariant.CANTOR_SHEAR:
        return CantorShear(**params)
    if variant == MapVariant.SMOOTH_SHEAR:
        return SmoothShear(**params)
    if variant == MapVariant.SAMPLED:
        return SampledMap.from_dict(params)
    return Conjugated(
        map_from_dict(params["inner"]),
        AffineMap(**params["pre"]),
        AffineMap(**params["post"]),
    )


def map_from_dict(data: Dict[str, Any]) -> BoundaryMap:
    params = {k: v for k, v in data.items() if k != "variant"}
    return make_map(data["variant"], **params)


def eval(phi: BoundaryMap, x: Point2) -> Point2:  # noqa: A001
    return phi.eval(x)


def _as_corners(cell: Cell) -> np.ndarray:
    if isinstance(cell, DyadicSquare):
        return np.asarray([cell.corners()], dtype=float)
    corners = np.asarray(cell, dtype=float)
    return corners.reshape(-1, 4, 2)


def boundary_samples(corners: np.ndarray, n: int) -> np.ndarray:
    """``n`` points along each closed quad boundary, corners included."""
    per_side = max(1, n // 4)
    t = np.arange(per_side) / per_side
    starts = corners
    ends = np.roll(corners, -1, axis=1)
    pts = starts[:, :, None, :] + t[None, None, :, None] * (ends - starts)[:, :, None, :]
    return pts.reshape(corners.shape[0], 4 * per_side, 2)


_CHUNK = 1 << 22


def _max_pairwise(images: np.ndarray) -> np.ndarray:
    count, n, _ = images.shape
    out = np.empty(count)
    step = max(1, _CHUNK // (n * n))
    for s in range(0, count, step):
        block = images[s : s + step]
        diff = block[:, :, None, :] - block[:, None, :, :]
        out[s : s + step] = np.sqrt((diff**2).sum(axis=3)).max(axis=(1, 2))
    return out


def _polygon_lengths(images: np.ndarray) -> np.ndarray:
    return np.linalg.norm(images - np.roll(images, -1, axis=1), axis=2).sum(axis=1)


def _refine(measure, phi: BoundaryMap, corners: np.ndarray, n: int, n_max: int):
    values = measure(phi.eval_many(boundary_samples(corners, n).reshape(-1, 2)).reshape(
        corners.shape[0], -1, 2
    ))
    pending = np.arange(corners.shape[0])
    while n < n_max and pending.size:
        n *= 2
        sub = corners[pending]
        finer = measure(
            phi.eval_many(boundary_samples(sub, n).reshape(-1, 2)).reshape(
                sub.shape[0], -1, 2
            )
        )
        change = np.abs(finer - values[pending]) / np.maximum(np.abs(finer), 1e-300)
        values[pending] = finer
        pending = pending[change >= 1e-3]
    return values


def image_diameters(
    phi: BoundaryMap, corners: np.ndarray, n: int = 8, n_max: int = 1024
) -> np.ndarray:
    if n < 8:
        msg = f"At least 8 boundary samples required, got {n}"
        raise ValueError(msg)
    exact = phi.exact_cell_diameter(corners)
    if exact is not None:
        return exact
    return _refine(_max_pairwise, phi, corners, n, n_max)


def image_boundary_lengths(
    phi: BoundaryMap, corners: np.ndarray, n: int = 16, n_max: int = 4096
) -> np.ndarray:
    if n < 16:
        msg = f"At least 16 boundary samples required, got {n}"
        raise ValueError(msg)
    exact = phi.exact_cell_length(corners)
    if exact is not None:
        return exact
    return _refine(_polygon_lengths, phi, corners, n, n_max)


def image_diameter(phi: BoundaryMap, cell: Cell, n: int = 8) -> float:
    return float(image_diameters(phi, _as_corners(cell), n)[0])


def image_boundary_length(phi: BoundaryMap, cell: Cell, n: int = 16) -> float:
    return float(image_boundary_lengths(phi, _as_corners(cell), n)[0])


def point_cloud_diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


def check_injective(phi: BoundaryMap, samples: int = 1000, seed: int = 42) -> bool:
    """Spot-check injectivity on random points of the unit square."""
    rng = np.random.default_rng(seed)
    points = rng.random((samples, 2))
    images = phi.eval_many(points)
    close = pdist(images) < 1e-14
    return not close.any()


def catalog() -> List[Dict[str, Any]]:
    """Built-in maps with known regularity data."""
    cantor = CantorShear()
    entries = [
        {"variant": str(MapVariant.IDENTITY), "params": {}, "holder_exponent": 1.0},
        {
            "variant": str(MapVariant.SMOOTH_SHEAR),
            "params": SmoothShear().params(),
            "holder_exponent": 1.0,
        },
        {
            "variant": str(MapVariant.RADIAL_POWER),
            "params": {"alpha": 0.5, "presentation": "square"},
            "holder_exponent": 0.5,
            "obstruction_window": "1 - 2/p < alpha < 1 - 3/q",
            "diverging_slope": "q(1 - alpha) - 3",
        },
        {
            "variant": str(MapVariant.CANTOR_SHEAR),
            "params": cantor.params(),
            "holder_exponent": cantor.holder_exponent,
            "length_sum_finite_for": "q(1 - alpha) < 1",
            "length_slope": "q(1 - alpha) - 2 + alpha",
        },
        {
            "variant": str(MapVariant.SAW_SHEAR),
            "params": SawShear().params(),
            "holder_exponent": None,
            "gagliardo": "diverges for q > 1",
        },
    ]
    return entries
