import argparse
import logging
import sys
from typing import List, Optional

from nhgeo.cli import gauss_commands, minimize_commands, report_commands, simulate_commands, theorem_commands
from nhgeo.core.config import settings
from nhgeo.core.errors import CommandExit

logger = logging.getLogger(__name__)

COMMAND_MODULES = (simulate_commands, gauss_commands, theorem_commands, minimize_commands, report_commands)


def global_options() -> argparse.ArgumentParser:
    """
    Flags accepted before or after the subcommand.

    Defaults are suppressed so that only typed flags override the config file.
    """
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--log-level", dest="log_level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    parent.add_argument("--config", default=argparse.SUPPRESS, help="Flat key=value run-configuration file")
    parent.add_argument("--out", default=argparse.SUPPRESS, help="Output directory")
    parent.add_argument("--steps", type=int, default=argparse.SUPPRESS, help="Integrator steps")
    parent.add_argument("--grid", type=int, default=argparse.SUPPRESS, help="Grid points per axis")
    parent.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="Verdict tolerance")
    parent.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Seed of perturbation studies")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = global_options()
    parser = argparse.ArgumentParser(
        prog="nhgeo",
        description="Nonholonomic exponential maps, Gauss metrics and length minimization",
        parents=[parent],
    )
    subparsers = parser.add_subparsers(dest="subcommand", metavar="command")
    for module in COMMAND_MODULES:
        module.register(subparsers, [parent])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse the command line, run one subcommand and return its exit code.

    Exit codes: 0 success, 2 configuration error, 3 numerical failure.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(args, "log_level", settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if not getattr(args, "handler", None):
        parser.print_help()
        return 2

    try:
        return args.handler(args)
    except CommandExit as e:
        logger.error(e.detail)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
