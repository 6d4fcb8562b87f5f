import logging
import sys
from argparse import ArgumentTypeError
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List
from unittest.mock import MagicMock, Mock, patch

import pytest

from sobext.__main__ import EXIT_CONFIG, EXIT_CONSTRUCTION, EXIT_INCONCLUSIVE, app
from sobext.analysis import SeminormMethod, Verdict
from sobext.boundary_maps import MapVariant
from sobext.homotopy import HomotopyMode
from sobext.run_config import Command, MapSpec, RunConfig
from sobext.sobext_error import ConstructionError
from sobext.sobext_runner import RunResult

from .conftest import L_SHAPE

logger = logging.getLogger(__name__)

SAMPLED_MAP = str(Path(__file__).parent / "data" / "sampled_shear.json")


class ExitTest(Exception):
    pass


@pytest.fixture
def cli_isolation(monkeypatch):
    def mock_exit(*args, **kwargs):
        raise ExitTest(*args, **kwargs)

    monkeypatch.setattr("sys.exit", mock_exit)

    @contextmanager
    def _isolation(args: List):
        args.insert(0, "")
        with patch.object(sys, "argv", args):
            yield

    yield _isolation


@pytest.fixture
def run_mock(monkeypatch) -> MagicMock:
    mock = MagicMock(return_value=RunResult())
    monkeypatch.setattr("sobext.__main__.run", mock)
    return mock


@contextmanager
def expects_config(command: Command, default_difference: Dict):
    config = RunConfig(command=command)
    for k, v in default_difference.items():
        setattr(config, k, v)
    yield config


@pytest.mark.parametrize(
    "extra_args,expectation",
    [
        # fmt: off
        # no extra args, expecting run with default options
        (
            ["energy"],
            expects_config(Command.ENERGY, {}),
        ),
        (
            ["extend", "--levels", "2", "--injectivize", "--mode", "migration"],
            expects_config(Command.EXTEND, {"levels": 2, "injectivize": True,
                                            "mode": HomotopyMode.MIGRATION}),
        ),
        (
            ["energy", "-K", "6", "--q", "2.5", "--method", "monte-carlo", "--select-grids"],
            expects_config(Command.ENERGY, {"levels": 6, "q": 2.5, "select_grids": True,
                                            "method": SeminormMethod.MONTE_CARLO}),
        ),
        # map options
        #   - alias and generic parameters parsed as YAML scalars
        (
            ["energy", "--map", "saw", "--param", "depth=3", "--param", "q=2"],
            expects_config(Command.ENERGY, {"map": MapSpec(MapVariant.SAW_SHEAR,
                                                           {"depth": 3, "q": 2})}),
        ),
        #   - dedicated parameter flags
        (
            ["energy", "--map", "radial", "--alpha", "0.5"],
            expects_config(Command.ENERGY, {"map": MapSpec(MapVariant.RADIAL_POWER,
                                                           {"alpha": 0.5})}),
        ),
        #   - map file implies a sampled map
        (
            ["energy", "--map-file", SAMPLED_MAP],
            expects_config(Command.ENERGY, {"map": MapSpec(MapVariant.SAMPLED, {},
                                                           SAMPLED_MAP)}),
        ),
        # invalid map options
        (
            ["energy", "--map", "fold"],
            pytest.raises(ArgumentTypeError,
                match=r"'fold' is not a valid MapVariant"
            ),
        ),
        (
            ["energy", "--param", "depth"],
            pytest.raises(ArgumentTypeError,
                match=r"--param expects NAME=VALUE, got 'depth'"
            ),
        ),
        # geodesic options, points accept space or comma separators
        (
            ["geodesic", "--polygon", "0 0; 2 0; 2 1; 1 1; 1 2; 0 2",
             "--start", "1.8 0.5", "--end", "0.5,1.8", "--foliation", "8"],
            expects_config(Command.GEODESIC, {"polygon": L_SHAPE, "start": (1.8, 0.5),
                                              "end": (0.5, 1.8), "foliation": 8}),
        ),
        # invalid geodesic options
        #   - too many tokens
        (
            ["geodesic", "--start", "1 2 3"],
            pytest.raises(ArgumentTypeError,
                match=r"--start must be exactly two numeric values separated by a space."
            ),
        ),
        #   - invalid float numbers
        (
            ["geodesic", "--end", "a 1"],
            pytest.raises(ArgumentTypeError,
                match=r"could not convert string to float: 'a'"
            ),
        ),
        #   - too few vertices
        (
            ["geodesic", "--polygon", "0 0; 1 0"],
            pytest.raises(ArgumentTypeError,
                match=r"--polygon needs at least three vertices"
            ),
        ),
        # fmt: on
    ],
)
def test_cli_arguments(cli_isolation, run_mock, extra_args, expectation) -> None:
    with cli_isolation(extra_args):
        with expectation as c:
            app()

        if isinstance(c, RunConfig):
            run_mock.assert_called_once_with(c)
        else:
            run_mock.assert_not_called()


def test_config_file_with_overrides(cli_isolation, run_mock, data_dir) -> None:
    args = ["energy", "-c", str(data_dir / "saw_energy.yaml"), "--levels", "4"]
    with cli_isolation(args):
        app()
    config = run_mock.call_args.args[0]
    assert config.levels == 4
    assert config.method == SeminormMethod.MONTE_CARLO
    assert config.map == MapSpec(MapVariant.SAW_SHEAR, {"q": 2.0, "depth": 3})


@pytest.mark.parametrize(
    "args,message",
    [
        (["energy", "--levels", "1"], "levels must be at least 2"),
        (["geodesic"], "geodesic needs a polygon"),
        (["energy", "-c", "missing.yaml"], "Unable to read 'missing.yaml'"),
    ],
)
def test_invalid_configuration(caplog, cli_isolation, run_mock, args, message) -> None:
    with cli_isolation(args):
        with pytest.raises(ExitTest) as e:
            app()

    assert e.value.args[0] == EXIT_CONFIG
    run_mock.assert_not_called()
    assert message in caplog.records[-1].message


class TestExitCodes:
    def test_inconclusive_is_fine_by_default(self, cli_isolation, run_mock) -> None:
        run_mock.return_value = RunResult(verdicts={"diam": Verdict.INCONCLUSIVE})
        with cli_isolation(["energy"]):
            app()

    def test_strict_inconclusive(self, cli_isolation, run_mock) -> None:
        run_mock.return_value = RunResult(verdicts={"diam": Verdict.INCONCLUSIVE})
        with cli_isolation(["energy", "--strict"]):
            with pytest.raises(ExitTest) as e:
                app()
        assert e.value.args[0] == EXIT_INCONCLUSIVE

    def test_strict_with_verdicts(self, cli_isolation, run_mock) -> None:
        run_mock.return_value = RunResult(verdicts={"diam": Verdict.CONVERGING})
        with cli_isolation(["energy", "--strict"]):
            app()

    def test_failures(self, caplog, cli_isolation, run_mock) -> None:
        run_mock.return_value = RunResult(failures=["seed 3: foliation crossing"])
        with cli_isolation(["verify"]):
            with pytest.raises(ExitTest) as e:
                app()
        assert e.value.args[0] == EXIT_CONSTRUCTION
        assert caplog.records[-1].message == "seed 3: foliation crossing"

    def test_construction_error(self, caplog, cli_isolation, monkeypatch) -> None:
        failing = Mock(side_effect=ConstructionError("arms meet", (2, 5)))
        monkeypatch.setattr("sobext.__main__.run", failing)
        with cli_isolation(["extend"]):
            with pytest.raises(ExitTest) as e:
                app()
        assert e.value.args[0] == EXIT_CONSTRUCTION
        assert caplog.records[-1].message == "Construction failed: cell (2, 5): arms meet"
