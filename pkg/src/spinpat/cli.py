"""Command line entry point: ``spinpat <experiment> [options]``.

Exit status is 0 when every check of the experiment passes, 1 when a check
fails and 2 for bad arguments or configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS, run_experiment

log = logging.getLogger("spinpat")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinpat", description="Spin-logic pattern detector experiments.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", help="YAML parameter file (default: bundled parameters)")
    ap.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    ap.add_argument("--out", help="output directory (default: results/<experiment>)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one parameter, e.g. --set supply.V=10 (value in the file's unit)")
    ap.add_argument("--runs", type=int, help="stochastic runs per condition")
    ap.add_argument("--max-p", type=int, default=7, help="largest training count for prop1")
    ap.add_argument("--train", nargs="+", metavar="IMG", help="training images (compare3x3, train-detect9x9)")
    ap.add_argument("--input", metavar="IMG", help="input image (compare3x3, train-detect9x9)")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        params = load_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"spinpat: configuration error: {exc}", file=sys.stderr)
        return 2
    opts = {}
    if args.runs is not None:
        if args.runs < 1:
            print("spinpat: --runs must be positive", file=sys.stderr)
            return 2
        opts["runs"] = args.runs
    if args.experiment == "prop1":
        opts["max_p"] = args.max_p
    if args.experiment in ("compare3x3", "train-detect9x9"):
        opts.update(train=args.train, input=args.input)
    try:
        result = run_experiment(args.experiment, params, seed=args.seed, **opts)
    except (ValueError, LookupError, OSError) as exc:
        print(f"spinpat: {exc}", file=sys.stderr)
        return 2
    out = args.out or f"results/{args.experiment}"
    result.write(out)
    for name, ok in result.checks.items():
        log.info("%-40s %s", name, "PASS" if ok else "FAIL")
    log.info("wrote %s", out)
    return 0 if result.passed else 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
