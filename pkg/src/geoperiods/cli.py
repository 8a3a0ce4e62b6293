"""Command-line entry point.

    geoperiods <subcommand> --config <path> [--out <dir>] [--jobs <n>] [--seed <u64>]

Subcommands: limiting-curvature, admissibility, periods-scan, phase-check,
decay-scan.  Results (CSVs, metadata.json, plot.py, rendered PNGs) land in
the output directory; completed bundles are cached under the config hash in
$GEOPERIODS_CACHE or <out>/.cache.  Exit codes: 0 ok, 2 config error,
3 convergence error, 4 hypothesis-not-met.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import SUBCOMMANDS, load_config, validate_config
from .errors import ConfigError, ConvergenceError, GeoperiodsError
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_HYPOTHESIS = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoperiods",
        description="eigenfunction periods along curves on model surfaces",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run a {name} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be a nonnegative integer", "/seed")
            cfg["seed"] = args.seed  # reinjected before hashing
        if cfg["subcommand"] != args.subcommand:
            raise ConfigError(
                f"config is for {cfg['subcommand']!r}, invoked as"
                f" {args.subcommand!r}",
                pointer="/subcommand",
            )
        validate_config(cfg)
        cache_dir = os.path.join(args.out, ".cache")
        bundle = run_experiment(cfg, jobs=args.jobs, cache_dir=cache_dir)
        bundle.write(args.out)
    except ConfigError as exc:
        print(f"config error at {exc.pointer or '/'}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except GeoperiodsError as exc:
        # bad parameter values reachable only through the config
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"{bundle.subcommand} {bundle.config_hash} -> {args.out}")
    for name in sorted(bundle.csvs):
        print(f"  {name}")
    for name, ok in sorted(bundle.metadata.get("checks", {}).items()):
        print(f"  check {name}: {'pass' if ok else 'FAIL'}")
    if bundle.metadata.get("hypothesis_met") is False:
        print("hypothesis not met: curvature margin below eps0", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
