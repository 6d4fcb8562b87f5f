import argparse
import logging
import sys
from typing import Any, Dict, List, Tuple

import yaml

from . import __version__
from .boundary_maps import MapVariant
from .run_config import Command, load_config
from .sobext_error import ConfigError, ConstructionError, InvariantViolation
from .sobext_runner import run

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_INCONCLUSIVE = 2
EXIT_CONSTRUCTION = 3


def parse_point(value: str, option_string) -> Tuple[float, float]:
    point = tuple(map(float, value.replace(",", " ").split()))
    if len(point) != 2:
        msg = f"{option_string} must be exactly two numeric values separated by a space."
        raise ValueError(msg)
    return point  # type: ignore


class PointAction(argparse.Action):
    def __call__(self, parser, namespace, values: str, option_string=None) -> None:
        try:
            value = parse_point(values, option_string)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
        setattr(namespace, self.dest, value)


class PolygonAction(argparse.Action):
    """List of ';' separated vertices, each two space separated numbers"""

    def __call__(self, parser, namespace, values: str, option_string=None) -> None:
        try:
            tokens = [t for t in values.split(";") if t.strip()]
            value = [parse_point(t, option_string) for t in tokens]
            if len(value) < 3:
                msg = f"{option_string} needs at least three vertices"
                raise ValueError(msg)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
        setattr(namespace, self.dest, value)


class MapVariantAction(argparse.Action):
    def __call__(self, parser, namespace, values: str, option_string=None) -> None:
        try:
            value = MapVariant.get(values)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
        setattr(namespace, self.dest, str(value))


class MapParamAction(argparse.Action):
    """Collects NAME=VALUE map parameters, values parsed as YAML scalars"""

    def __call__(self, parser, namespace, values: str, option_string=None) -> None:
        try:
            name, sep, raw = values.partition("=")
            if not sep or not name:
                msg = f"{option_string} expects NAME=VALUE, got '{values}'"
                raise ValueError(msg)
            value = yaml.safe_load(raw)
        except (ValueError, yaml.YAMLError) as e:
            raise argparse.ArgumentTypeError(str(e))
        params = dict(getattr(namespace, self.dest, None) or {})
        params[name] = value
        setattr(namespace, self.dest, params)


def _options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    suppress = argparse.SUPPRESS
    common.add_argument(
        "-c", "--config", default="", help="JSON or YAML run configuration file"
    )
    common.add_argument(
        "-m",
        "--map",
        dest="variant",
        default=suppress,
        action=MapVariantAction,
        help=(
            "Boundary map variant: identity, affine, saw, radial, cantor,\n"
            "smooth-shear, sampled or conjugated"
        ),
    )
    common.add_argument(
        "--param",
        dest="params",
        default=suppress,
        action=MapParamAction,
        help="Map parameter NAME=VALUE, may be repeated, for example alpha=0.5",
    )
    common.add_argument(
        "--k", type=float, default=suppress, help="Cantor shear ratio parameter"
    )
    common.add_argument(
        "--alpha", type=float, default=suppress, help="Radial power exponent"
    )
    common.add_argument(
        "--map-file", default=suppress, help="JSON file with a sampled boundary map"
    )
    common.add_argument("-K", "--levels", type=int, default=suppress, help="Levels")
    common.add_argument("--p", type=float, default=suppress, help="Exponent p")
    common.add_argument("--q", type=float, default=suppress, help="Exponent q")
    common.add_argument(
        "--method",
        default=suppress,
        help="Seminorm estimator: neighbor-pair-dyadic or monte-carlo",
    )
    common.add_argument(
        "--budget", type=int, default=suppress, help="Seminorm evaluation budget"
    )
    common.add_argument(
        "--resolution", type=int, default=suppress, help="Energy samples per cell edge"
    )
    common.add_argument(
        "--lattice", type=int, default=suppress, help="Sampled field lattice size"
    )
    common.add_argument(
        "--slices", type=int, default=suppress, help="Exported slices per level"
    )
    common.add_argument(
        "--pairs", type=int, default=suppress, help="Point pairs per goal check"
    )
    common.add_argument(
        "--select-grids",
        action="store_true",
        default=suppress,
        help="Select good grids against the map instead of the diagonal family",
    )
    common.add_argument(
        "--mode", default=suppress, help="Boundary homotopy: auto, straight, migration"
    )
    common.add_argument(
        "--injectivize",
        action="store_true",
        default=suppress,
        help="Spread shortest curves through boundary vertices",
    )
    common.add_argument(
        "--extension-energy",
        action="store_true",
        default=suppress,
        help="Integrate the energy of the built extension",
    )
    common.add_argument(
        "--polygon",
        default=suppress,
        action=PolygonAction,
        help="Polygon vertices as 'X Y; X Y; X Y'",
    )
    common.add_argument(
        "--polygon-file", dest="polygon_path", default=suppress, help="Polygon file"
    )
    common.add_argument("--start", default=suppress, action=PointAction, help="'X Y'")
    common.add_argument("--end", default=suppress, action=PointAction, help="'X Y'")
    common.add_argument(
        "--foliation", type=int, default=suppress, help="Number of foliation curves"
    )
    common.add_argument(
        "--samples", type=int, default=suppress, help="Random polygons to verify"
    )
    common.add_argument("-o", "--output", default=suppress, help="Output directory")
    common.add_argument("--seed", type=int, default=suppress, help="Random seed")
    common.add_argument(
        "-j", "--threads", type=int, default=suppress, help="Worker threads"
    )
    common.add_argument(
        "--strict",
        action="store_true",
        default=suppress,
        help="Exit with code 2 when a verdict is inconclusive",
    )
    common.add_argument(
        "--log-level",
        required=False,
        default="WARNING",
        choices=logging._nameToLevel.keys(),
        type=str,
        help="Provide logging level, default=%(default)s",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Sobolev homeomorphic extensions of planar boundary maps",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _options()
    helps = {
        Command.ENERGY: "Energy sums, seminorm estimate and convergence verdicts",
        Command.EXTEND: "Build the 3D extension and export slices and checks",
        Command.GEODESIC: "Draw the shortest path in a polygon",
        Command.EXAMPLES: "List built-in boundary maps",
        Command.VERIFY: "Run seeded self-checks",
    }
    for command, text in helps.items():
        subparsers.add_parser(
            str(command).lower(),
            parents=[common],
            help=text,
            formatter_class=argparse.RawTextHelpFormatter,
        )
    return parser


_META = {"config", "log_level", "variant", "params", "k", "alpha", "map_file"}


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    given = vars(args)
    overrides = {key: value for key, value in given.items() if key not in _META}
    map_override: Dict[str, Any] = {}
    if "variant" in given:
        map_override["variant"] = given["variant"]
    params = dict(given.get("params", {}))
    for key in ("k", "alpha"):
        if key in given:
            params[key] = given[key]
    if params:
        map_override["params"] = params
    if "map_file" in given:
        map_override["path"] = given["map_file"]
        map_override.setdefault("variant", str(MapVariant.SAMPLED))
    if map_override:
        overrides["map"] = map_override
    return overrides


def app(argv: List[str] = None) -> None:  # type: ignore[assignment]
    parser = build_parser()
    args = parser.parse_args(argv)

    # set up logger
    logging.basicConfig(
        level=args.log_level, format="%(asctime)s: %(message)s", datefmt="%H:%M:%S"
    )

    code = 0
    try:
        config = load_config(args.config, overrides_from(args))
        result = run(config)
        if result.failures:
            for failure in result.failures:
                logger.error(failure)
            code = EXIT_CONSTRUCTION
        elif config.strict and result.inconclusive:
            logger.error(f"Inconclusive verdicts: {result.verdicts}")
            code = EXIT_INCONCLUSIVE
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e.message}")
        code = EXIT_CONFIG
    except (ConstructionError, InvariantViolation) as e:
        logger.error(f"Construction failed: {e.message}")
        code = EXIT_CONSTRUCTION

    logging.shutdown()
    if code:
        sys.exit(code)


if __name__ == "__main__":
    app()
