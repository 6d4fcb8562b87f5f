from __future__ import annotations

import logging
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List

import numpy as np

from .analysis import Verdict, diam_sum, gagliardo, length_sum
from .boundary_maps import BoundaryMap, IdentityMap, catalog
from .diamond import PLBoundaryMap
from .dyadic_grid import diagonal_grid, parent_children
from .exporters import (
    geodesic_svg,
    grid_svg,
    write_energy_csv,
    write_goal_csv,
    write_json,
    write_obj,
)
from .extension3d import (
    CubeCell,
    ExtensionField,
    energy_estimate,
    goal_check,
    slice_collisions,
)
from .geodesic import ShortestCurveExtension, shortest_path, shortest_path_oracle
from .plgeom import normalize_polygon
from .run_config import Command, RunConfig
from .sobext_error import ConfigError, ConstructionError, InvariantViolation

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    outputs: List[str] = field(default_factory=list)
    verdicts: Dict[str, Verdict] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return any(v == Verdict.INCONCLUSIVE for v in self.verdicts.values())


def _output(config: RunConfig, name: str, result: RunResult) -> str:
    path = os.path.join(config.output, name)
    result.outputs.append(path)
    return path


def cmd_energy(config: RunConfig, result: RunResult) -> None:
    phi = config.map.build()
    threads = config.resolved_threads()
    diam = diam_sum(phi, config.q, config.levels)
    length = length_sum(
        phi, config.q, config.levels, select=config.select_grids, p=config.p, threads=threads
    )
    seminorm = gagliardo(phi, config.q, config.method, config.budget, config.seed)
    for report in (diam, length):
        result.verdicts[report.kind] = report.verdict
        logger.info(
            f"{report.kind} sum q={config.q}: total {report.total:.6g}, "
            f"slope {report.slope:.3g}, {report.verdict}"
        )
    write_energy_csv(_output(config, "energy.csv", result), [diam, length])
    write_json(
        _output(config, "energy.json", result),
        {
            "map": phi.to_dict(),
            "diam": diam.to_dict(),
            "length": length.to_dict(),
            "gagliardo": seminorm.to_dict(),
        },
    )


def _heights(levels: int, per_level: int) -> List[float]:
    heights = set()
    for k in range(1, levels + 1):
        cell = CubeCell(k, 0)
        heights.update(float(t) for t in np.linspace(cell.bot, cell.top, per_level))
    return sorted(heights, reverse=True)


@contextmanager
def construction_stage(stage: str) -> Iterator[None]:
    """Report value errors of a construction stage as construction failures."""
    try:
        yield
    except ValueError as e:
        msg = f"{stage} failed: {e}"
        raise ConstructionError(msg) from e


def cmd_extend(config: RunConfig, result: RunResult) -> None:
    phi = config.map.build()
    with construction_stage("Extension"):
        _extend(config, result, phi)


def _extend(config: RunConfig, result: RunResult, phi: BoundaryMap) -> None:
    threads = config.resolved_threads()
    field_ = ExtensionField.build(
        phi,
        config.levels,
        config.p,
        select_grids=config.select_grids,
        mode=config.mode,
        injectivize=config.injectivize,
        threads=threads,
    )
    field_.build_all(threads)
    heights = _heights(config.levels, config.slices)

    curves = [c for t in heights for c in field_.slice_boundaries(t)]
    write_obj(_output(config, "slices.obj", result), curves)
    write_json(_output(config, "field.json", result), field_.lattice(config.lattice, heights))

    ratios = [
        goal_check(field_, k, j, config.pairs, config.seed)
        for k in range(1, config.levels + 1)
        for j in range(4**k)
    ]
    write_goal_csv(_output(config, "goal.csv", result), ratios)

    cells = []
    for k in range(1, config.levels + 1):
        for j in range(4**k):
            collisions = slice_collisions(field_, k, j, grid=9, slices=config.slices)
            cells.append({"k": k, "j": j, "collisions": collisions})
    total = sum(c["collisions"] for c in cells)
    write_json(
        _output(config, "injectivity.json", result),
        {"clean": total == 0, "total_collisions": total, "cells": cells},
    )
    if total:
        logger.warning(f"{total} coinciding sample pairs on slices")

    for k, grid in field_.pl_grids.items():
        grid_svg(_output(config, f"grid_{k}.svg", result), grid)

    if config.extension_energy:
        estimate = energy_estimate(field_, config.q, config.resolution, threads=threads)
        write_json(_output(config, "extension_energy.json", result), estimate.to_dict())


def cmd_geodesic(config: RunConfig, result: RunResult) -> None:
    try:
        polygon = normalize_polygon(config.load_polygon())
    except ValueError as e:
        msg = f"Invalid polygon: {e}"
        raise ConfigError(msg) from e
    for name, point in (("start", config.start), ("end", config.end)):
        if not polygon.contains(point):
            msg = f"The {name} point {point} lies outside the polygon"
            raise ConfigError(msg)
    path = shortest_path(polygon, config.start, config.end)
    logger.info(f"Geodesic with {len(path)} vertices, length {path.length:.6g}")
    foliation = []
    if config.foliation:
        extension = ShortestCurveExtension(PLBoundaryMap.from_polygon(polygon.vertices))
        heights = np.linspace(-1.0, 1.0, config.foliation + 2)[1:-1]
        foliation = [extension.curve(float(s)) for s in heights]
    geodesic_svg(_output(config, "geodesic.svg", result), polygon.vertices, path, foliation)


def cmd_examples(config: RunConfig, result: RunResult) -> None:
    entries = catalog()
    for entry in entries:
        logger.info(f"{entry['variant']}: {entry.get('params', {})}")
    write_json(_output(config, "examples.json", result), entries)


def star_polygon(rng: np.random.Generator, vertices: int) -> List[tuple]:
    angles = np.sort(rng.uniform(0, 2 * math.pi, vertices))
    radii = rng.uniform(0.3, 1.0, vertices)
    return [(float(r * math.cos(a)), float(r * math.sin(a))) for r, a in zip(radii, angles)]


def _inside_point(rng: np.random.Generator, polygon) -> tuple:
    while True:
        p = (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        if polygon.contains(p):
            return p


def check_geodesics(config: RunConfig) -> List[str]:
    rng = np.random.default_rng(config.seed)
    failures = []
    for i in range(config.samples):
        try:
            polygon = normalize_polygon(star_polygon(rng, int(rng.integers(3, 31))))
        except ValueError:
            continue
        a, b = _inside_point(rng, polygon), _inside_point(rng, polygon)
        funnel = shortest_path(polygon, a, b)
        oracle = shortest_path_oracle(polygon, a, b)
        if abs(funnel.length - oracle.length) > 1e-9:
            failures.append(
                f"polygon {i}: funnel {funnel.length:.12g} vs oracle {oracle.length:.12g}"
            )
    return failures


def check_grids(config: RunConfig) -> List[str]:
    failures = []
    for k in range(1, 5):
        coarse, fine = diagonal_grid(k), diagonal_grid(k + 1)
        for j in range(4**k):
            try:
                parent_children(coarse, fine, j)
            except InvariantViolation as e:
                failures.append(f"level {k}: {e.message}")
    return failures


def check_identity(config: RunConfig) -> List[str]:
    failures = []
    report = diam_sum(IdentityMap(), 3.0, 10)
    expected = 2**1.5 * (1 - 2.0**-10)
    if abs(report.total - expected) > 1e-6:
        failures.append(f"identity diameter sum {report.total:.12g}, expected {expected:.12g}")
    return failures


CHECKS: Dict[str, Callable[[RunConfig], List[str]]] = {
    "geodesic_oracle": check_geodesics,
    "grid_two_point": check_grids,
    "identity_closed_form": check_identity,
}


def cmd_verify(config: RunConfig, result: RunResult) -> None:
    report = {}
    for name, check in CHECKS.items():
        failures = check(config)
        report[name] = {"ok": not failures, "failures": failures}
        result.failures.extend(f"{name}: {f}" for f in failures)
        logger.info(f"Check {name}: {len(failures)} failure(s)")
    write_json(_output(config, "verify.json", result), report)


COMMANDS: Dict[Command, Callable[[RunConfig, RunResult], None]] = {
    Command.ENERGY: cmd_energy,
    Command.EXTEND: cmd_extend,
    Command.GEODESIC: cmd_geodesic,
    Command.EXAMPLES: cmd_examples,
    Command.VERIFY: cmd_verify,
}


def run(config: RunConfig) -> RunResult:
    os.makedirs(config.output, exist_ok=True)
    result = RunResult()
    result.outputs.append(config.save(config.output))
    COMMANDS[config.command](config, result)
    return result
