"""
simulate and expmap-grid: single trajectories and exponential-map grids
"""

import argparse
import logging

import numpy as np

from nhgeo.cli.common import add_system_arguments, command_handler, vector_arg
from nhgeo.core.errors import ConfigError
from nhgeo.models.geometry import VelocityPolicy
from nhgeo.models.models import ExpGridSummary, RunConfig, SimulateSummary
from nhgeo.services.dynamics_service import integrate_nh_geodesic, trajectory_diagnostics
from nhgeo.services.expmap_service import exp_nh_jacobian, exp_nh_state, tangent_map_residual
from nhgeo.services.systems_service import get_system
from nhgeo.services.theorem_service import build_patch, uses_default_base
from nhgeo.storage.artifacts import output_dir, write_csv, write_report

logger = logging.getLogger(__name__)


def cmd_simulate(config: RunConfig) -> SimulateSummary:
    """
    Integrate one nonholonomic geodesic and write t, q, v, speed and constraint residual per sample.

    --v0 takes either fiber coordinates (k entries, mapped through the
    registry chart) or an ambient velocity (n entries).
    """
    entry = get_system(config.system, config.I, config.J)
    sys = entry.system
    if config.v0 is None:
        raise ConfigError("simulate needs an initial velocity (--v0)")
    patch = build_patch(entry, config)
    v0 = np.asarray(config.v0, dtype=float)
    if v0.size == patch.k:
        v0 = patch.chart.to_velocity(v0)
    elif v0.size != sys.chart_dim:
        raise ConfigError(
            f"--v0 needs {patch.k} fiber or {sys.chart_dim} ambient components for '{entry.id}', got {v0.size}"
        )

    traj = integrate_nh_geodesic(
        sys,
        patch.base,
        v0,
        T=config.T,
        steps=config.steps,
        policy=VelocityPolicy(config.policy),
        project_each_step=config.project_each_step,
    )
    drift, residual, reparam = trajectory_diagnostics(traj, sys)

    n = sys.chart_dim
    header = ["t"] + [f"q_{i + 1}" for i in range(n)] + [f"v_{i + 1}" for i in range(n)]
    header += ["speed", "constraint_residual"]
    rows = np.column_stack([traj.times, traj.q, traj.v, traj.speeds, traj.constraint_residuals])
    out = output_dir(config.out)
    csv = write_csv(out, "simulate", header, rows)

    summary = SimulateSummary(
        system=entry.id,
        rows=len(traj),
        endpoint=traj.endpoint.tolist(),
        speed_drift=drift,
        max_constraint_residual=residual,
        reparam_residual=reparam,
        csv=str(csv),
        config=config.model_dump(),
    )
    write_report(out, "simulate", summary)
    return summary


def cmd_expmap_grid(config: RunConfig) -> ExpGridSummary:
    """exp_nh over a grid of the patch domain with oracle errors and velocity-identity residuals."""
    entry = get_system(config.system, config.I, config.J)
    patch = build_patch(entry, config)
    k, n = patch.k, patch.sys.chart_dim
    w = patch.domain.grid(config.grid, k)

    q, velocity = exp_nh_state(patch, w)
    jac = exp_nh_jacobian(patch, w)
    identity = np.max(np.abs(np.einsum("...ij,...j->...i", jac, w) - velocity), axis=-1)

    header = [f"w_{i + 1}" for i in range(k)] + [f"q_{i + 1}" for i in range(n)]
    columns = [w, q]
    oracle = None
    if entry.exp_closed is not None and uses_default_base(entry, config):
        oracle = np.max(np.abs(q - entry.exp_closed(w)), axis=-1)
        header.append("oracle_error")
        columns.append(oracle)
    header.append("velocity_identity_residual")
    columns.append(identity)

    out = output_dir(config.out)
    csv = write_csv(out, "expmap_grid", header, np.column_stack(columns))
    summary = ExpGridSummary(
        system=entry.id,
        points=int(w.shape[0]),
        domain=patch.domain.describe(),
        tangent_map_residual=tangent_map_residual(patch),
        max_velocity_identity_residual=float(np.max(identity)),
        max_oracle_error=None if oracle is None else float(np.max(oracle)),
        csv=str(csv),
        config=config.model_dump(),
    )
    write_report(out, "expmap_grid", summary)
    return summary


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("simulate", parents=parents, help="Integrate a nonholonomic geodesic")
    add_system_arguments(parser)
    parser.add_argument("--v0", type=vector_arg, default=argparse.SUPPRESS,
                        help="Initial velocity: k fiber or n ambient components")
    parser.add_argument("--T", dest="T", type=float, default=argparse.SUPPRESS, help="Final time")
    parser.add_argument("--policy", choices=["strict", "project"], default=argparse.SUPPRESS,
                        help="Treatment of velocities outside the distribution")
    parser.add_argument("--project-each-step", dest="project_each_step", action="store_true",
                        default=argparse.SUPPRESS, help="Project the velocity onto D after every step")
    parser.set_defaults(handler=command_handler("simulate")(cmd_simulate))

    parser = subparsers.add_parser("expmap-grid", parents=parents, help="Exponential map over a grid")
    add_system_arguments(parser)
    parser.set_defaults(handler=command_handler("expmap-grid")(cmd_expmap_grid))
