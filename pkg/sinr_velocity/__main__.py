"""
Command line entry point of sinr-velocity.

Exit codes are 0 on success, 1 on configuration error and 2 when an acceptance check fails.
"""

###########
# Imports #
###########

# Python imports #

import sys
import argparse
import logging

# Local imports #

from sinr_velocity._common import ConfigError, configure_logging
from sinr_velocity.experiment import ExperimentConfig, run
from sinr_velocity.params import default_params_database

#############
# Constants #
#############

logger = logging.getLogger("sinr_velocity")

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 1
EXIT_CHECK_FAILURE = 2

#############
# Functions #
#############

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinr-velocity",
        description="Simulate exit times and information velocity in space-time SINR networks.")
    parser.add_argument("--config", help="JSON configuration file, or name of a file of the database "
                        f"({default_params_database}).")
    parser.add_argument("--experiment", choices=["exit-time", "velocity", "aloha-baseline", "validate", "sweep"],
                        help="Kind of experiment, overrides the configuration.")
    parser.add_argument("--seed", type=int, help="Master seed, overrides the configuration.")
    parser.add_argument("--out", help="Output directory.")
    parser.add_argument("--jobs", type=int, help="Number of worker processes.")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a configuration key, the value is parsed as JSON.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Increase the verbosity.")
    return parser

def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Build the configuration with the precedence command line > file > defaults.
    """

    if args.config is None:
        config = ExperimentConfig()
    elif args.config.endswith(".json"):
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig.from_file(f"{default_params_database}/{args.config}.json")

    config.apply_overrides(args.overrides)
    if args.experiment is not None:
        config.experiment = args.experiment
    if args.seed is not None:
        config.set_value("seed", args.seed)
    if args.out is not None:
        config.out = args.out
    if args.jobs is not None:
        config.jobs = args.jobs
    config.check()
    return config

def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = load_config(args)
    except (ConfigError, OSError) as error:
        logger.error("%s", error)
        return EXIT_CONFIG_ERROR

    summary = run(config)

    if config.experiment == "validate" and not summary.passed:
        failed = [check["check_name"] for check in summary.checks if not check["pass"]]
        logger.error("Acceptance checks failed: %s", ", ".join(failed))
        return EXIT_CHECK_FAILURE
    return EXIT_SUCCESS

if __name__ == "__main__":
    sys.exit(main())
