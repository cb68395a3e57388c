"""
minimize: discrete length minimization between two points of R^2
"""

import argparse
import logging

import numpy as np

from nhgeo.cli.common import add_metric_arguments, command_handler, vector_arg
from nhgeo.core.errors import ConfigError
from nhgeo.models.geometry import MinimizeOptions
from nhgeo.models.models import MinimizeSummary, RunConfig
from nhgeo.services.geometry_service import metric_at
from nhgeo.services.riemannian_service import minimize_length, perturbed_line, sup_distance_to_segment
from nhgeo.services.systems_service import get_metric
from nhgeo.storage.artifacts import output_dir, write_csv, write_report

logger = logging.getLogger(__name__)


def cmd_minimize(config: RunConfig) -> MinimizeSummary:
    """
    Minimize from a perturbed straight line; non-convergence is reported in the summary, not raised.

    The expected length ||end||_{G(0)} is reported for radial problems (start at 0).
    """
    metric = get_metric(config.metric, config.I, config.J, metric_steps=config.metric_steps, radius=config.radius)
    start = np.zeros(metric.dim) if config.start is None else np.asarray(config.start, dtype=float)
    if config.end is None:
        raise ConfigError("minimize needs an end point (--end)")
    end = np.asarray(config.end, dtype=float)
    if start.size != metric.dim or end.size != metric.dim:
        raise ConfigError(f"Endpoints of '{metric.name}' need {metric.dim} coordinates")

    rng = np.random.default_rng(config.seed)
    init = perturbed_line(start, end, config.nodes, config.bump, rng=rng)
    options = MinimizeOptions(objective=config.objective, max_iters=config.max_iters, grad_tol=config.grad_tol)
    result = minimize_length(metric, (start, end), init, options=options)

    expected = None
    if not np.any(start):
        expected = float(np.sqrt(end @ metric_at(metric, start) @ end))
    lengths = result.lengths
    out = output_dir(config.out)
    csv = write_csv(out, "minimize", ["iteration", "length"], np.column_stack([np.arange(lengths.size), lengths]))
    write_csv(out, "minimize_curve", [f"w_{i + 1}" for i in range(metric.dim)], result.curve.nodes)

    summary = MinimizeSummary(
        metric=metric.name,
        initial_length=result.initial_length,
        final_length=result.final_length,
        expected_length=expected,
        sup_distance_to_line=sup_distance_to_segment(result.curve, start, end),
        iterations=result.iterations,
        converged=result.converged,
        status=result.status,
        monotone=bool(np.all(np.diff(lengths) <= 1e-12)),
        csv=str(csv),
        config=config.model_dump(),
    )
    write_report(out, "minimize", summary)
    return summary


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("minimize", parents=parents, help="Minimize discrete curve length")
    add_metric_arguments(parser)
    parser.add_argument("--I", dest="I", type=float, default=argparse.SUPPRESS, help="Disk inertia I")
    parser.add_argument("--J", dest="J", type=float, default=argparse.SUPPRESS, help="Disk inertia J")
    parser.add_argument("--radius", type=float, default=argparse.SUPPRESS, help="Metric domain radius")
    parser.add_argument("--start", type=vector_arg, default=argparse.SUPPRESS, help="Start point (default 0)")
    parser.add_argument("--end", type=vector_arg, default=argparse.SUPPRESS, help="End point")
    parser.add_argument("--bump", type=float, default=argparse.SUPPRESS, help="Amplitude of the initial bump")
    parser.add_argument("--nodes", type=int, default=argparse.SUPPRESS, help="Curve nodes")
    parser.add_argument("--objective", choices=["length", "energy"], default=argparse.SUPPRESS)
    parser.add_argument("--max-iters", dest="max_iters", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--grad-tol", dest="grad_tol", type=float, default=argparse.SUPPRESS)
    parser.set_defaults(handler=command_handler("minimize")(cmd_minimize))
