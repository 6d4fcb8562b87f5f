from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from sobext.exporters import read_energy_csv  # noqa: E402

logger = logging.getLogger(__name__)


def group_rows(rows: List[dict]) -> Dict[str, List[dict]]:
    groups: Dict[str, List[dict]] = defaultdict(list)
    for row in rows:
        groups[f"{row['kind']} q={row['q']:g}"].append(row)
    return groups


def plot_energy(input_path: str, output_path: str) -> None:
    groups = group_rows(read_energy_csv(input_path))
    if not groups:
        logger.error(f"No rows in '{input_path}'")
        sys.exit(1)

    fig, (terms_ax, sums_ax) = plt.subplots(1, 2, figsize=(10, 4))
    for label, rows in groups.items():
        rows = sorted(rows, key=lambda r: r["level"])
        levels = [r["level"] for r in rows]
        terms_ax.semilogy(levels, [r["term"] for r in rows], marker="o", label=label)
        sums_ax.plot(levels, [r["cumulative"] for r in rows], marker="o", label=label)
        logger.info(f"{label}: slope {rows[-1]['slope']:.3g}")

    terms_ax.set_xlabel("level k")
    terms_ax.set_ylabel("term")
    sums_ax.set_xlabel("level k")
    sums_ax.set_ylabel("partial sum")
    terms_ax.legend()
    fig.tight_layout()
    fig.savefig(output_path)
    logger.info(f"Wrote {output_path}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Energy CSV to level plots")
    parser.add_argument("-in", required=True, help="energy.csv written by 'sobext energy'")
    parser.add_argument("-out", required=True, help="Output image path, png or svg")
    parser.add_argument(
        "-f",
        "--force",
        action="store_true",
        help="Override output if already exists",
    )
    parser.add_argument(
        "--log-level",
        required=False,
        default="WARNING",
        choices=logging._nameToLevel.keys(),
        type=str,
        help="Provide logging level, default=%(default)s",
    )

    args = parser.parse_args()
    input_path = getattr(args, "in")
    output_path = getattr(args, "out")

    # set up logger
    logging.basicConfig(
        level=args.log_level, format="%(asctime)s: %(message)s", datefmt="%H:%M:%S"
    )

    if not args.force and Path(output_path).is_file():
        logger.error(f"Output file '{output_path}' already exists, exiting...")
        sys.exit(1)

    plot_energy(input_path, output_path)
