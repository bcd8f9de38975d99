#!/usr/bin/env python3

"""
fracshe entrypoint code and command line interface (CLI)
"""

import argparse
import logging
import sys
from pathlib import Path

from fracshe.config import apply_overrides, parse_config
from fracshe.experiments import EXPERIMENTS
from fracshe.run import run
from fracshe.utils import ConfigError
from fracshe.version import VERSION

logger = logging.getLogger("fracshe")

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s: %(message)s"


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, required=True, help="[.ini] experiment configuration file")
    common.add_argument("--seed", type=int, help="[u64] overrides mc.seed")
    common.add_argument("--out", type=str, help="[directory] overrides output.dir")
    common.add_argument("--replicas", type=int, help="[int] overrides mc.replicas")

    parser = argparse.ArgumentParser(
        prog="fracshe", description="fracshe - numerical lab for the time-fractional stochastic heat equation"
    )
    parser.add_argument("-V", "--version", action="version", version=VERSION)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for kind, experiment in EXPERIMENTS.items():
        subparsers.add_parser(
            kind,
            parents=[common],
            help=sys.modules[experiment.__module__].__doc__.strip(),
            epilog=f"CSV output - {experiment.describe_outputs()}",
        )
    return parser


def main(args=None):
    """
    Run fracshe via command line
    """
    args = build_parser().parse_args(args)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    config_path = Path(args.config)
    if not config_path.is_file():
        logger.error("config file '%s' not found", config_path)
        raise SystemExit(2)

    try:
        config = parse_config(config_path.read_text(encoding="utf-8"), kind=args.command)
        config = apply_overrides(config, seed=args.seed, replicas=args.replicas, output_dir=args.out)
    except ConfigError as err:
        for violation in err.violations:
            logger.error("config: %s", violation)
        raise SystemExit(2)

    manifest = run(config)
    raise SystemExit(manifest.exit_status)


if __name__ == "__main__":
    main(sys.argv[1:])
