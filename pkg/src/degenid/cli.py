"""Command-line entry point: ``degenid preset <name>`` and ``degenid run <config>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .config import ConfigError
from .experiments import PRESETS, NumericalFailure, run_config, run_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--cells", type=int, default=None, help="number of spatial cells")
    common.add_argument("--steps", type=int, default=None, help="number of time steps")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="degenid", description="Degenerate-coefficient identification experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("preset", parents=[common], help="run a registered experiment")
    p.add_argument("name", help=f"one of: {', '.join(sorted(PRESETS))}")
    r = sub.add_parser("run", parents=[common], help="run a YAML config")
    r.add_argument("config", help="path to the config file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    for flag in ("cells", "steps"):
        val = getattr(args, flag)
        if val is not None and val < 1:
            print(f"error: --{flag} must be positive", file=sys.stderr)
            return EXIT_CONFIG
    try:
        if args.command == "preset":
            summary = run_preset(args.name, args.out, args.cells, args.steps, args.seed or 0)
        else:
            summary = run_config(args.config, args.out, args.cells, args.steps, args.seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    line = {k: v for k, v in summary.items() if not isinstance(v, (list, dict))}
    print(json.dumps(line, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
