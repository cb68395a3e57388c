"""
gauss-check and pullback: Gauss sweeps of registry metrics and tables of pullback metric components
"""

import argparse
import logging
from typing import List, Optional, Tuple

import numpy as np

from nhgeo.cli.common import add_metric_arguments, add_system_arguments, command_handler
from nhgeo.core.errors import ConfigError
from nhgeo.models.models import GaussCheckSummary, PullbackSummary, RunConfig
from nhgeo.services.expmap_service import InducedChart
from nhgeo.services.geometry_service import metric_at
from nhgeo.services.metrics_service import check_gauss, flat_metric, pullback_metric, pushforward_metric
from nhgeo.services.systems_service import disk_exp_closed, get_metric, get_system, gmod_metric
from nhgeo.services.theorem_service import build_patch, uses_default_base
from nhgeo.storage.artifacts import output_dir, write_csv, write_report

logger = logging.getLogger(__name__)

# grid of the published g^nh_0 comparison: x in [-1, 1], 0.1 <= |y| <= 1.5
INDUCED_X_RANGE = (-1.0, 1.0)
INDUCED_Y_RANGE = (0.1, 1.5)


def cmd_gauss_check(config: RunConfig) -> GaussCheckSummary:
    metric = get_metric(config.metric, config.I, config.J, metric_steps=config.metric_steps, radius=config.radius)
    report = check_gauss(metric, grid=config.grid, tol=config.tol)
    summary = GaussCheckSummary(**report.model_dump(), config=config.model_dump())
    write_report(output_dir(config.out), "gauss_check", summary)
    return summary


def _components(matrices: np.ndarray) -> np.ndarray:
    return np.stack([matrices[..., 0, 0], matrices[..., 0, 1], matrices[..., 1, 1]], axis=-1)


def _induced_grid(points_per_axis: int) -> np.ndarray:
    x = np.linspace(*INDUCED_X_RANGE, points_per_axis)
    half = np.linspace(*INDUCED_Y_RANGE, max(points_per_axis // 2, 2))
    y = np.concatenate([-half[::-1], half])
    mesh = np.meshgrid(x, y, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def pullback_table(config: RunConfig) -> Tuple[List[str], np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """
    Components (E, F, G) of the requested pullback on a grid with the
    derived and published comparison columns the registry has for it.

    Returns:
        Tuple: header, rows, derived deltas and published deltas (None when absent)
    """
    entry = get_system(config.system, config.I, config.J)
    if entry.chart.k != 2:
        raise ConfigError(f"Pullback tables need a rank-2 distribution, '{entry.id}' has rank {entry.chart.k}")
    patch = build_patch(entry, config)
    closed = uses_default_base(entry, config)
    derived = published = None

    if config.kind == "ambient":
        metric = get_metric(f"pullback:{entry.id}", config.I, config.J, radius=config.radius)
        points = metric.domain.grid(config.grid, 2)
        values = _components(metric_at(metric, points))
        labels = ("u", "v")
    elif config.kind == "gmod":
        if entry.id != "disk":
            raise ConfigError(f"The g^mod pullback exists for the disk only, not '{entry.id}'")
        # independent of the closed form: finite-difference Jacobian of the closed exponential
        numeric = pullback_metric(disk_exp_closed, gmod_metric(config.I, config.J), 2, patch.domain, order=4)
        points = entry.gauss_domain.grid(config.grid, 2)
        values = _components(metric_at(numeric, points, check=False))
        derived = np.stack(entry.closed_metrics["gmod-pullback"](points), axis=-1)
        published = np.stack(entry.closed_metrics["gmod-pullback-published"](points), axis=-1)
        labels = ("u", "v")
    else:
        chart = InducedChart(
            patch,
            entry.induced_select,
            exp_map=entry.exp_closed if closed else None,
            exp_jacobian=entry.exp_jacobian if closed else None,
        )
        g_nh = pushforward_metric(flat_metric(2, domain=entry.gauss_domain), chart, name=f"g^nh[flat]:{entry.id}")
        if "example52" in entry.closed_metrics and closed:
            points = _induced_grid(config.grid)
            published = np.stack(entry.closed_metrics["example52"](points), axis=-1)
        else:
            points = chart.forward(entry.gauss_domain.scaled(0.5).grid(config.grid, 2))
        values = _components(metric_at(g_nh, points))
        labels = tuple(f"y{i + 1}" for i in range(2))

    header = list(labels) + ["E", "F", "G"]
    columns = [points, values]
    derived_delta = published_delta = None
    if derived is not None:
        derived_delta = np.max(np.abs(values - derived), axis=-1)
        header += ["E_derived", "F_derived", "G_derived", "derived_delta"]
        columns += [derived, derived_delta]
    if published is not None:
        published_delta = np.max(np.abs(values - published), axis=-1)
        header += ["E_published", "F_published", "G_published", "published_delta"]
        columns += [published, published_delta]
    return header, np.column_stack(columns), derived_delta, published_delta


def cmd_pullback(config: RunConfig) -> PullbackSummary:
    header, rows, derived_delta, published_delta = pullback_table(config)
    out = output_dir(config.out)
    csv = write_csv(out, f"pullback_{config.kind}", header, rows)
    if published_delta is not None and np.max(published_delta) > 1e-6:
        logger.warning(f"Published components differ from the computed pullback by up to {np.max(published_delta):.3e}")
    summary = PullbackSummary(
        system=config.system,
        kind=config.kind,
        points=int(rows.shape[0]),
        max_derived_delta=None if derived_delta is None else float(np.max(derived_delta)),
        max_published_delta=None if published_delta is None else float(np.max(published_delta)),
        csv=str(csv),
        config=config.model_dump(),
    )
    write_report(out, f"pullback_{config.kind}", summary)
    return summary


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("gauss-check", parents=parents, help="Sweep the Gauss condition of a metric")
    add_system_arguments(parser)
    add_metric_arguments(parser)
    parser.set_defaults(handler=command_handler("gauss-check")(cmd_gauss_check))

    parser = subparsers.add_parser("pullback", parents=parents, help="Tabulate pullback metric components")
    add_system_arguments(parser)
    parser.add_argument("--metric", dest="kind", choices=["ambient", "gmod", "induced-flat"],
                        default=argparse.SUPPRESS, help="Which pullback to tabulate")
    parser.set_defaults(handler=command_handler("pullback")(cmd_pullback))
