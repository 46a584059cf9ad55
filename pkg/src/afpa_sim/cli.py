"""Command line entry point.

All subcommands share the same contract: a JSON config, a seed, and an
output directory.  Given identical config and seed, every subcommand
writes byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, default_config_path, load_config
from . import drivers

_SUBCOMMANDS = {
    "characterize-size": lambda cfg, seed, out: drivers.run_characterize_size(cfg, out),
    "characterize-stiffness": lambda cfg, seed, out: drivers.run_characterize_stiffness(cfg, out),
    "step": lambda cfg, seed, out: drivers.run_step(cfg, out),
    "plan": lambda cfg, seed, out: drivers.run_plan(cfg, out),
    "feasibility": lambda cfg, seed, out: drivers.run_feasibility(cfg, out),
    "study-run": lambda cfg, seed, out: drivers.run_study(cfg, seed, out),
    "study-analyze": lambda cfg, seed, out: drivers.run_study_analyze(cfg, out),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afpa-sim",
        description="Simulator and planner for an antagonistic fabric pneumatic actuator rig",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument(
            "--config",
            type=Path,
            default=None,
            help="JSON config path (defaults to the packaged calibrated config)",
        )
        p.add_argument("--seed", type=int, default=0, help="u64 random seed")
        p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed > 2**64 - 1:
        print(f"error: seed must fit in u64, got {args.seed}", file=sys.stderr)
        return 2
    config_path = args.config if args.config is not None else default_config_path()
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        paths = _SUBCOMMANDS[args.command](config, args.seed, out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
