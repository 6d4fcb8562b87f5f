import logging
import os
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pytest

logger = logging.getLogger(__name__)

Points = List[Tuple[float, float]]

UNIT_SQUARE: Points = [(0, 0), (1, 0), (1, 1), (0, 1)]
# L-shaped room, the reflex vertex at (1, 1) bends every path between the arms
L_SHAPE: Points = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
# fmt: off
COMB: Points = [
    (0, 0), (5, 0), (5, 3), (4, 3), (4, 1), (3, 1),
    (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3),
]
# fmt: on


def pytest_addoption(parser) -> None:
    parser.addoption(
        "--skip-slow",
        action="store_true",
        help="Skip tests marked as slow (full 3D constructions)",
        default=False,
    )


def pytest_collection_modifyitems(config, items) -> None:
    if not config.getoption("--skip-slow"):
        return
    skip = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if item.get_closest_marker("slow"):
            item.add_marker(skip)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(os.path.realpath(__file__)).parent / "data"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


def arc_points(arc) -> np.ndarray:
    """Vertices of a polyline like object as an array"""
    return np.asarray(arc.vertices, dtype=float)


def assert_close(a, b, tol: float = 1e-9) -> None:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    assert a.shape == b.shape, f"{a.shape} != {b.shape}"
    assert np.allclose(a, b, atol=tol, rtol=0), f"max difference {np.abs(a - b).max()}"
