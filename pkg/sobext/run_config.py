from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .analysis import SeminormMethod
from .boundary_maps import BoundaryMap, MapVariant, SampledMap, make_map
from .defaults import DEFAULT_LEVELS, DEFAULT_SEED
from .homotopy import HomotopyMode
from .sobext_error import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "SOBEXT_THREADS"
CONFIG_NAME = "run_config.json"


class Command(str, Enum):
    ENERGY = "Energy"
    EXTEND = "Extend"
    GEODESIC = "Geodesic"
    EXAMPLES = "Examples"
    VERIFY = "Verify"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def get(cls, name: str) -> Command:
        if isinstance(name, str):
            try:
                return Command(name.title())
            except ValueError:
                # fallback to error below to use 'name' before converting to titlecase
                pass
        msg = f"'{name}' is not a valid Command"
        raise ValueError(msg)


@dataclass
class MapSpec:
    variant: MapVariant = MapVariant.IDENTITY
    params: Dict[str, Any] = field(default_factory=dict)
    path: str = ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> MapSpec:
        return cls(
            MapVariant.get(data.get("variant", "identity")),
            dict(data.get("params", {})),
            data.get("path", ""),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": str(self.variant), "params": self.params, "path": self.path}

    def build(self) -> BoundaryMap:
        try:
            if self.path:
                with open(self.path, "r", encoding="utf-8") as f:
                    data = json.load(f)
                return SampledMap.from_dict(data)
            return make_map(self.variant, **self.params)
        except (OSError, KeyError, TypeError, ValueError) as e:
            msg = f"Unable to build {self.variant} map: {e}"
            raise ConfigError(msg) from e


@dataclass
class RunConfig:
    command: Command = Command.ENERGY
    map: MapSpec = field(default_factory=MapSpec)
    levels: int = DEFAULT_LEVELS
    p: float = 2.0
    q: float = 3.0
    method: SeminormMethod = SeminormMethod.NEIGHBOR_PAIR_DYADIC
    budget: int = 10**5
    resolution: int = 8
    lattice: int = 9
    slices: int = 3
    pairs: int = 200
    select_grids: bool = False
    mode: HomotopyMode = HomotopyMode.AUTO
    injectivize: bool = False
    extension_energy: bool = False
    polygon: List[Tuple[float, float]] = field(default_factory=list)
    polygon_path: str = ""
    start: Optional[Tuple[float, float]] = None
    end: Optional[Tuple[float, float]] = None
    foliation: int = 0
    samples: int = 50
    output: str = "."
    seed: int = DEFAULT_SEED
    threads: Optional[int] = None
    strict: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            msg = f"Unknown configuration keys: {', '.join(sorted(unknown))}"
            raise ConfigError(msg)
        values = dict(data)
        try:
            if "command" in values:
                values["command"] = Command.get(values["command"])
            if "map" in values:
                values["map"] = MapSpec.from_dict(values["map"])
            if "method" in values:
                values["method"] = SeminormMethod.get(values["method"])
            if "mode" in values:
                values["mode"] = HomotopyMode.get(values["mode"])
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if values.get("polygon"):
            values["polygon"] = [tuple(p) for p in values["polygon"]]
        for key in ("start", "end"):
            if values.get(key) is not None:
                values[key] = tuple(values[key])
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["command"] = str(self.command)
        data["map"] = self.map.to_dict()
        data["method"] = str(self.method)
        data["mode"] = str(self.mode)
        return data

    def validate(self) -> None:
        minimum = 2 if self.command == Command.ENERGY else 1
        checks = [
            (self.levels >= minimum, f"levels must be at least {minimum}, got {self.levels}"),
            (self.q >= 1, f"q must be at least 1, got {self.q}"),
            (self.p > 1, f"p must exceed 1, got {self.p}"),
            (self.budget >= 10**4, f"budget must be at least 10^4, got {self.budget}"),
            (self.resolution >= 8, f"resolution must be at least 8, got {self.resolution}"),
            (self.lattice >= 2, f"lattice must be at least 2, got {self.lattice}"),
            (self.slices >= 2, f"slices must be at least 2, got {self.slices}"),
            (self.pairs >= 1, f"pairs must be positive, got {self.pairs}"),
            (self.samples >= 1, f"samples must be positive, got {self.samples}"),
            (self.foliation >= 0, f"foliation must be nonnegative, got {self.foliation}"),
            (
                self.threads is None or self.threads >= 1,
                f"threads must be positive, got {self.threads}",
            ),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.command == Command.GEODESIC:
            if not self.polygon and not self.polygon_path:
                msg = "geodesic needs a polygon or a polygon file"
                raise ConfigError(msg)
            if self.start is None or self.end is None:
                msg = "geodesic needs both start and end points"
                raise ConfigError(msg)
        if self.map.path and not Path(self.map.path).is_file():
            msg = f"Map file '{self.map.path}' does not exist"
            raise ConfigError(msg)

    def load_polygon(self) -> List[Tuple[float, float]]:
        if self.polygon:
            return self.polygon
        data = load_file(self.polygon_path)
        points = data["polygon"] if isinstance(data, dict) else data
        return [(float(x), float(y)) for x, y in points]

    def resolved_threads(self) -> int:
        return resolve_threads(self.threads)

    def save(self, directory: str) -> str:
        path = os.path.join(directory, CONFIG_NAME)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
        return path


def resolve_threads(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            threads = int(env)
        except ValueError:
            msg = f"{THREADS_ENV} must be an integer, got '{env}'"
            raise ConfigError(msg)
        if threads < 1:
            msg = f"{THREADS_ENV} must be positive, got {threads}"
            raise ConfigError(msg)
        return threads
    return os.cpu_count() or 1


def load_file(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            if path.endswith("yaml") or path.endswith("yml"):
                return yaml.safe_load(f)
            return json.load(f)
    except (OSError, ValueError, yaml.YAMLError) as e:
        msg = f"Unable to read '{path}': {e}"
        raise ConfigError(msg) from e


def load_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Configuration from a JSON or YAML file, ``overrides`` taking precedence."""
    data = load_file(path) if path else {}
    if not isinstance(data, dict):
        msg = f"Configuration '{path}' must hold a mapping"
        raise ConfigError(msg)
    data = dict(data)
    for key, value in (overrides or {}).items():
        if key == "map" and isinstance(value, dict):
            base = dict(data.get("map", {}))
            params = {**base.get("params", {}), **value.get("params", {})}
            base.update({k: v for k, v in value.items() if k != "params"})
            base["params"] = params
            data["map"] = base
        else:
            data[key] = value
    config = RunConfig.from_dict(data)
    config.validate()
    logger.info(f"Configuration: {config.to_dict()}")
    return config
