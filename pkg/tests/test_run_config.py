import json
import logging

import pytest

from sobext.analysis import SeminormMethod
from sobext.boundary_maps import AffineMap, IdentityMap, MapVariant, SampledMap, SawShear
from sobext.homotopy import HomotopyMode
from sobext.run_config import (
    CONFIG_NAME,
    THREADS_ENV,
    Command,
    MapSpec,
    RunConfig,
    load_config,
    load_file,
    resolve_threads,
)
from sobext.sobext_error import ConfigError

from .conftest import L_SHAPE

logger = logging.getLogger(__name__)


@pytest.mark.parametrize(
    "name,expected",
    [
        ("energy", Command.ENERGY),
        ("EXTEND", Command.EXTEND),
        ("Geodesic", Command.GEODESIC),
        ("examples", Command.EXAMPLES),
        ("verify", Command.VERIFY),
    ],
)
def test_command_get(name, expected) -> None:
    assert Command.get(name) == expected


@pytest.mark.parametrize("name", ["fold", 3, None])
def test_command_get_invalid(name) -> None:
    with pytest.raises(ValueError, match=f"'{name}' is not a valid Command"):
        Command.get(name)


class TestMapSpec:
    def test_defaults(self) -> None:
        spec = MapSpec.from_dict({})
        assert spec.variant == MapVariant.IDENTITY
        assert isinstance(spec.build(), IdentityMap)

    def test_build_with_params(self) -> None:
        spec = MapSpec.from_dict({"variant": "saw", "params": {"q": 2.0, "depth": 2}})
        phi = spec.build()
        assert isinstance(phi, SawShear)
        assert phi.depth == 2
        assert spec.to_dict() == {
            "variant": "Saw-Shear",
            "params": {"q": 2.0, "depth": 2},
            "path": "",
        }

    def test_build_from_file(self, data_dir) -> None:
        spec = MapSpec(path=str(data_dir / "sampled_shear.json"))
        assert isinstance(spec.build(), SampledMap)

    # fmt: off
    @pytest.mark.parametrize(
        "spec",
        [
            MapSpec(MapVariant.SAW_SHEAR, {"q": 0.5}),
            MapSpec(MapVariant.AFFINE, {"matrix": ((0.0, 0.0), (0.0, 0.0))}),
            MapSpec(MapVariant.SMOOTH_SHEAR, {"bogus": 1}),
            MapSpec(path="does-not-exist.json"),
        ],
    )
    # fmt: on
    def test_build_errors(self, spec) -> None:
        with pytest.raises(ConfigError, match="Unable to build"):
            spec.build()


class TestRunConfig:
    def test_defaults_validate(self) -> None:
        config = RunConfig()
        config.validate()
        assert config.command == Command.ENERGY
        assert config.method == SeminormMethod.NEIGHBOR_PAIR_DYADIC
        assert config.mode == HomotopyMode.AUTO

    def test_from_dict(self) -> None:
        config = RunConfig.from_dict(
            {
                "command": "geodesic",
                "polygon": [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]],
                "start": [1.8, 0.5],
                "end": [0.5, 1.8],
                "mode": "migration",
            }
        )
        assert config.command == Command.GEODESIC
        assert config.polygon == L_SHAPE
        assert config.start == (1.8, 0.5)
        assert config.mode == HomotopyMode.MIGRATION
        config.validate()

    def test_unknown_keys(self) -> None:
        with pytest.raises(ConfigError, match="Unknown configuration keys: colour, size"):
            RunConfig.from_dict({"size": 3, "colour": "red"})

    @pytest.mark.parametrize(
        "data",
        [{"command": "fold"}, {"method": "guess"}, {"mode": "bend"}, {"map": {"variant": "x"}}],
    )
    def test_invalid_enums(self, data) -> None:
        with pytest.raises(ConfigError, match="is not a valid"):
            RunConfig.from_dict(data)

    def test_dict_round_trip(self) -> None:
        config = RunConfig(
            command=Command.EXTEND,
            map=MapSpec(MapVariant.AFFINE, {"matrix": [[2.0, 0.0], [0.0, 1.0]]}),
            levels=2,
            injectivize=True,
        )
        data = json.loads(json.dumps(config.to_dict()))
        assert data["command"] == "Extend"
        assert data["map"]["variant"] == "Affine"
        again = RunConfig.from_dict(data)
        assert again == config
        assert isinstance(again.map.build(), AffineMap)

    # fmt: off
    @pytest.mark.parametrize(
        "values,match",
        [
            ({"levels": 1}, "levels must be at least 2"),
            ({"command": Command.EXTEND, "levels": 0}, "levels must be at least 1"),
            ({"q": 0.5}, "q must be at least 1"),
            ({"p": 1.0}, "p must exceed 1"),
            ({"budget": 10}, "budget must be at least"),
            ({"resolution": 4}, "resolution must be at least 8"),
            ({"lattice": 1}, "lattice must be at least 2"),
            ({"slices": 1}, "slices must be at least 2"),
            ({"pairs": 0}, "pairs must be positive"),
            ({"samples": 0}, "samples must be positive"),
            ({"foliation": -1}, "foliation must be nonnegative"),
            ({"threads": 0}, "threads must be positive"),
            ({"command": Command.GEODESIC}, "needs a polygon"),
            ({"command": Command.GEODESIC, "polygon": L_SHAPE}, "needs both start and end"),
            ({"map": MapSpec(path="missing.json")}, "does not exist"),
        ],
    )
    # fmt: on
    def test_validate(self, values, match) -> None:
        with pytest.raises(ConfigError, match=match):
            RunConfig(**values).validate()

    def test_load_polygon(self, data_dir) -> None:
        config = RunConfig(polygon_path=str(data_dir / "l_shape.json"))
        assert config.load_polygon() == L_SHAPE
        assert RunConfig(polygon=L_SHAPE).load_polygon() == L_SHAPE

    def test_save(self, tmpdir) -> None:
        config = RunConfig(levels=3, seed=7)
        path = config.save(str(tmpdir))
        assert path.endswith(CONFIG_NAME)
        with open(path, "r", encoding="utf-8") as f:
            assert RunConfig.from_dict(json.load(f)) == config


class TestThreads:
    def test_explicit_value(self, monkeypatch) -> None:
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads(5) == 5

    def test_environment(self, monkeypatch) -> None:
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads(None) == 3
        assert RunConfig().resolved_threads() == 3

    def test_cpu_count(self, monkeypatch) -> None:
        monkeypatch.delenv(THREADS_ENV, raising=False)
        monkeypatch.setattr("os.cpu_count", lambda: 6)
        assert resolve_threads(None) == 6

    @pytest.mark.parametrize("value,match", [("many", "must be an integer"), ("0", "positive")])
    def test_invalid_environment(self, monkeypatch, value, match) -> None:
        monkeypatch.setenv(THREADS_ENV, value)
        with pytest.raises(ConfigError, match=match):
            resolve_threads(None)


class TestLoadConfig:
    def test_yaml_file(self, data_dir) -> None:
        config = load_config(str(data_dir / "saw_energy.yaml"))
        assert config.command == Command.ENERGY
        assert config.map.variant == MapVariant.SAW_SHEAR
        assert config.method == SeminormMethod.MONTE_CARLO
        assert (config.levels, config.q, config.budget) == (3, 2.0, 20000)

    def test_overrides_take_precedence(self, data_dir) -> None:
        overrides = {"levels": 5, "map": {"params": {"depth": 2}}}
        config = load_config(str(data_dir / "saw_energy.yaml"), overrides)
        assert config.levels == 5
        assert config.map.variant == MapVariant.SAW_SHEAR
        assert config.map.params == {"q": 2.0, "depth": 2}

    def test_overrides_without_file(self) -> None:
        config = load_config("", {"command": "extend", "levels": 2})
        assert config.command == Command.EXTEND and config.levels == 2

    def test_validation_runs(self, data_dir) -> None:
        with pytest.raises(ConfigError, match="levels must be at least 2"):
            load_config(str(data_dir / "saw_energy.yaml"), {"levels": 1})

    def test_not_a_mapping(self, tmpdir) -> None:
        path = tmpdir.join("list.yaml")
        path.write("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="must hold a mapping"):
            load_config(str(path))

    def test_unreadable_files(self, tmpdir) -> None:
        broken = tmpdir.join("broken.json")
        broken.write("{not json")
        with pytest.raises(ConfigError, match="Unable to read"):
            load_file(str(broken))
        with pytest.raises(ConfigError, match="Unable to read"):
            load_file(str(tmpdir.join("missing.yaml")))
