"""Command-line entry point: ``irsmimo {sumrate,rank,aasr,ao-trace}``.

Exit codes: 0 success, 2 configuration error, 3 property violation
(``ao-trace`` objective decreasing between iterations).  A gap of more
than 1% between the final objectives of the two reflection solvers is
reported as a warning only: full AO runs may settle in different local
optima.
"""

import argparse
import dataclasses
import logging
import sys

from ..errors import ConfigError
from .config import load_config
from .experiments import EXPERIMENTS
from .output import write_result

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 2, 3

# ao-trace property thresholds
MONOTONE_TOL = 1e-9
AGREEMENT_TOL = 0.01

log = logging.getLogger("irsmimo")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="irsmimo", description="IRS-assisted MIMO experiments (CSV + JSON output).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML scenario file (defaults if omitted)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--trials", type=int, default=None, help="override trials per point")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _check_trace(result):
    """``(violations, warnings)`` for an ao-trace result."""
    ex = result.extras
    bad = {s: d for s, d in ex["max_decrease"].items() if d > MONOTONE_TOL}
    violations, warnings = [], []
    if bad:
        violations.append(f"objective decreased (max drop per solver: {bad})")
    if ex["relative_gap"] > AGREEMENT_TOL:
        warnings.append(f"dual and UCMO finals differ by {100 * ex['relative_gap']:.2f}%")
    return violations, warnings


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        cfg = dataclasses.replace(cfg, **overrides).validate()
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s with seed %d, %d trials", args.command, cfg.seed, cfg.trials)
    try:
        result = EXPERIMENTS[args.command](cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    csv_path, json_path = write_result(result, args.out, cfg.to_dict())
    print(f"wrote {csv_path} and {json_path}")
    if args.command == "ao-trace":
        violations, warnings = _check_trace(result)
        for m in warnings:
            print(f"warning: {m}", file=sys.stderr)
        for m in violations:
            print(f"property violation: {m}", file=sys.stderr)
        if violations:
            return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
