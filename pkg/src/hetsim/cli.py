"""``hetsim`` command line tool.

    hetsim run <config> [--seed N] [--trials N] [--out PATH] [--workers N]
    hetsim validate <config>
    hetsim defaults <scenario>
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness
from .harness import SCENARIOS, ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write its CSV table")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--trials", type=int, help="override the trial count")
    p_run.add_argument("--out", help="override the output path")
    p_run.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default: all CPUs, capped by "
                            "HETSIM_MAX_WORKERS)")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")

    p_def = sub.add_parser("defaults", help="print a fully populated default config")
    p_def.add_argument("scenario", choices=sorted(SCENARIOS))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "defaults":
            sys.stdout.write(harness.default_document(args.scenario))
            return 0
        spec = harness.load_config(args.config)
        if args.command == "validate":
            harness.validate(spec)
            print(f"{args.config}: ok ({spec.scenario})")
            return 0
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            if args.trials < 0:
                raise ConfigError(f"--trials must be non-negative, got {args.trials}")
            overrides["trials"] = args.trials
        if overrides:
            spec = dataclasses.replace(spec, **overrides)
        harness.run(spec, workers=args.workers, out=args.out)
        return 0
    except ValueError as exc:
        # ConfigError and the scenario modules' infeasibility errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
