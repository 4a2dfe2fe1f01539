#!/usr/bin/env python3
"""Run, compare or validate Enhanced Gateway scenarios.

Subcommands:
  run       one simulation, writes timeseries/events/summary/counts CSVs
  compare   collaboration on vs off (and the static baseline) over seeds
  validate  load and check a scenario file, print OK

Usage:
    python -m scripts.run_experiment run --scenario scenarios/canonical.xml --seed 42 --out results/
    python -m scripts.run_experiment compare --scenario scenarios/canonical.xml --seeds 1,2,3 --out results/
    python -m scripts.run_experiment validate --scenario scenarios/canonical.xml

Exit codes: 0 success, 1 invalid scenario or arguments, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from egsim.config import COMPARE_WORKERS, LOG_LEVEL, OUTPUT_DIR
from egsim.errors import ConfigurationError

logger = logging.getLogger("egsim")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that prints usage and raises instead of exiting with 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="run_experiment", description="Enhanced Gateway WSN simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="Run one simulation")
    p_run.add_argument("--scenario", required=True, help="Scenario XML file")
    p_run.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    p_run.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory (created if absent)")

    p_cmp = sub.add_parser("compare", help="Collaboration on vs off over several seeds")
    p_cmp.add_argument("--scenario", required=True, help="Scenario XML file")
    p_cmp.add_argument("--seeds", type=_seed_list, required=True, help="Comma-separated seeds, e.g. 1,2,3")
    p_cmp.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory (created if absent)")
    p_cmp.add_argument("--workers", type=int, default=COMPARE_WORKERS,
                       help="Worker processes (default from EGSIM_COMPARE_WORKERS)")

    p_val = sub.add_parser("validate", help="Validate a scenario file")
    p_val.add_argument("--scenario", required=True, help="Scenario XML file")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError:
        return 1

    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
        datefmt="%H:%M:%S",
    )

    from egsim.scenario import load_scenario

    t0 = time.time()
    try:
        logger.info("═══ Loading scenario %s ═══", args.scenario)
        scenario = load_scenario(args.scenario)

        if args.command == "validate":
            print("OK")
            return 0

        if args.command == "run":
            from egsim.experiment import run_to_dir
            logger.info("═══ Simulating ═══")
            run_to_dir(scenario, args.out, seed=args.seed)
        else:
            from egsim.experiment import compare
            logger.info("═══ Comparing %d seeds ═══", len(args.seeds))
            compare(scenario, args.seeds, args.out, workers=args.workers)
    except ConfigurationError as exc:
        logger.error("Invalid scenario: %s", exc)
        return 1
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return 2

    logger.info("Done in %.1f seconds.", time.time() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main() or 0)
