"""
Shared plumbing of the subcommands: run-configuration resolution, argument
helpers and the error-to-exit-code mapping.
"""

import argparse
import logging
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from nhgeo.core.errors import CommandExit, ConfigError, NumericalError, VerificationFailed
from nhgeo.models.models import RunConfig

logger = logging.getLogger(__name__)

VECTOR_FIELDS = ("base", "v0", "start", "end")
# flags consumed by main itself, never part of a RunConfig
PROCESS_FLAGS = ("config", "log_level", "handler", "subcommand")


def parse_vector(text: str) -> List[float]:
    """'1,-0.5' -> [1.0, -0.5]."""
    try:
        values = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"Expected a comma-separated vector, got '{text}'")
    if not values:
        raise ConfigError("Empty vector")
    return values


def vector_arg(text: str) -> List[float]:
    try:
        return parse_vector(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def load_config_file(path: str) -> Dict[str, str]:
    """
    Flat key=value run-configuration file; '#' starts a comment and dashes in keys are allowed.

    Raises:
        ConfigError: If the file is missing, a key has no value or is unknown
    """
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"Config file '{path}' not found")
    values = {}
    for key, value in dotenv_values(file).items():
        name = key.strip().replace("-", "_")
        if value is None:
            raise ConfigError(f"Config file '{path}': key '{key}' has no value")
        if name not in RunConfig.model_fields or name == "command":
            raise ConfigError(f"Config file '{path}': unknown key '{key}'")
        values[name] = parse_vector(value) if name in VECTOR_FIELDS else value
    return values


def resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    """
    RunConfig from defaults, then the --config file, then explicit flags.

    Flags are registered with argparse.SUPPRESS defaults, so the namespace
    only holds what the user typed.
    """
    given = {k: v for k, v in vars(args).items() if k not in PROCESS_FLAGS}
    values: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(load_config_file(config_path))
    values.update(given)
    values["command"] = command
    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"Invalid configuration: {problems}")


def summary_line(command: str, report: BaseModel) -> str:
    data = report.model_dump()
    parts = [command]
    for key in ("system", "metric", "kind", "verdict", "status", "max_residual", "final_length", "csv"):
        value = data.get(key)
        if value is None:
            continue
        parts.append(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}")
    return " ".join(parts)


def command_handler(command: str) -> Callable:
    """
    Wrap a command body `fn(config) -> report` into an argparse handler.

    ConfigError exits with 2; NumericalError and VerificationFailed exit with 3.
    The summary line goes to stdout.
    """

    def decorator(fn: Callable[[RunConfig], BaseModel]) -> Callable[[argparse.Namespace], int]:
        @wraps(fn)
        def handler(args: argparse.Namespace) -> int:
            try:
                config = resolve_config(command, args)
                logger.info(f"Running {command}")
                report = fn(config)
                print(summary_line(command, report))
                logger.info(f"Finished {command}")
                return 0
            except CommandExit:
                raise
            except ConfigError as e:
                raise CommandExit(2, f"{command}: {str(e)}")
            except (NumericalError, VerificationFailed) as e:
                raise CommandExit(3, f"{command}: {str(e)}")

        return handler

    return decorator


def add_system_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", default=argparse.SUPPRESS, help="System id: particle or disk")
    parser.add_argument("--I", dest="I", type=float, default=argparse.SUPPRESS, help="Disk inertia I")
    parser.add_argument("--J", dest="J", type=float, default=argparse.SUPPRESS, help="Disk inertia J")
    parser.add_argument("--base", type=vector_arg, default=argparse.SUPPRESS, help="Base point, comma separated")
    parser.add_argument("--radius", type=float, default=argparse.SUPPRESS, help="Domain radius override")


def add_metric_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metric", default=argparse.SUPPRESS, help="Metric id")
    parser.add_argument("--metric-steps", dest="metric_steps", type=int, default=argparse.SUPPRESS,
                        help="Integrator steps inside metrics built from integrated maps")
    parser.add_argument("--outer-steps", dest="outer_steps", type=int, default=argparse.SUPPRESS,
                        help="Geodesic steps on metrics built from integrated maps")
    parser.add_argument("--coarse-grid", dest="coarse_grid", type=int, default=argparse.SUPPRESS,
                        help="Points per axis of the coarse velocity grids")

