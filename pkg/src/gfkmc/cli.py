"""Command-line entry point: ``gfkmc CONFIG [options]``."""

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, FitError, GuardExhaustedError
from .runner import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_GUARD = 4


def build_parser():
    p = argparse.ArgumentParser(prog="gfkmc", description="Generalized Feynman-Kac energy estimates.")
    p.add_argument("config", help="run configuration (INI with [run] and [trial] sections)")
    p.add_argument("-o", "--output-dir", help="directory for table, plot data, summary and manifest")
    p.add_argument("-w", "--workers", type=int, help="number of worker processes")
    p.add_argument("-s", "--seed", type=int, help="master seed override")
    p.add_argument("-n", "--paths", type=int, help="number of replications override")
    p.add_argument("--dry-run", action="store_true", help="validate the configuration and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config).with_overrides(
            workers=args.workers, master_seed=args.seed, n_paths=args.paths, output_dir=args.output_dir
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        print(f"ok: {config.n_paths} paths, scale {config.scale}, t = {list(config.checkpoint_times)}, "
              f"trial = {config.trial_name or config.trial.get('family')}, lambda0 = {config.lambda0}")
        return EXIT_OK
    try:
        result = run(config)
    except GuardExhaustedError as exc:
        print(f"guard exhausted: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    for model, fit in result["fits"].items():
        print(f"{model}: lambda1 = {fit.lambda1:.8f} +/- {fit.extrapolation_error:.2e}")
    print(f"outputs written to {result['output_dir']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
