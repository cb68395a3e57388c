"""
Constrained geodesic flow of a kinetic nonholonomic system: the
Lagrange-d'Alembert acceleration, its RK4 integration and the
diagnostics of speed conservation, constraint preservation and
reparametrization.
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np

from nhgeo.core.config import settings
from nhgeo.core.errors import ConfigError, ConstraintViolationError
from nhgeo.models.geometry import NonholonomicSystem, TangentVector, Trajectory, VelocityPolicy
from nhgeo.services.geometry_service import (
    PointLike,
    as_points,
    christoffel_at,
    constraint_at,
    constraint_partials_at,
    geodesic_spray,
    metric_at,
    orthogonal_projector_at,
)
from nhgeo.utils.integrators import rk4_second_order
from nhgeo.utils.linalg import inverse, quadratic_form, solve

logger = logging.getLogger(__name__)


def nh_acceleration(sys: NonholonomicSystem, q: PointLike, v: np.ndarray) -> np.ndarray:
    """
    Acceleration of the nonholonomic geodesic through (q, v).

    a = -Gamma(v, v) + g^-1 A^T lambda with
    lambda = (A g^-1 A^T)^-1 (A Gamma(v, v) - (dA.v) v), which keeps A(q) v
    constant along the flow.

    Args:
        sys: Nonholonomic system
        q: Positions (..., n)
        v: Velocities (..., n), expected in D_q

    Returns:
        np.ndarray: Accelerations (..., n)

    Raises:
        SingularMatrixError: If A g^-1 A^T is singular
    """
    q = as_points(q)
    v = np.asarray(v, dtype=float)
    spray = geodesic_spray(christoffel_at(sys.g, q), v)
    if sys.A.corank == 0:
        return -spray
    a = constraint_at(sys.A, q, check=False)
    d_a = constraint_partials_at(sys.A, q)
    # (dA.v) v = sum_i v_i (d_i A) v
    drift = np.einsum("...i,...imj,...j->...m", v, d_a, v)
    ginv = inverse(metric_at(sys.g, q, check=False), what=f"metric '{sys.g.name}'")
    ginv_at = ginv @ np.swapaxes(a, -1, -2)
    gram = a @ ginv_at
    rhs = np.einsum("...mj,...j->...m", a, spray) - drift
    lam = solve(gram, rhs, what="constraint Gram matrix A g^-1 A^T")
    return -spray + np.einsum("...im,...m->...i", ginv_at, lam)


def speed(g, q: PointLike, v: np.ndarray) -> np.ndarray:
    """Norm of v in g(q); sqrt(|g(v, v)|) for indefinite metrics."""
    return np.sqrt(np.abs(quadratic_form(metric_at(g, as_points(q), check=False), v, v)))


def constraint_residual(sys: NonholonomicSystem, q: PointLike, v: np.ndarray) -> np.ndarray:
    """||A(q) v||_inf over a batch."""
    if sys.A.corank == 0:
        return np.zeros(np.shape(v)[:-1])
    a = constraint_at(sys.A, as_points(q), check=False)
    return np.max(np.abs(np.einsum("...mj,...j->...m", a, v)), axis=-1)


def admissible_velocity(
    sys: NonholonomicSystem,
    q0: np.ndarray,
    v0: np.ndarray,
    policy: VelocityPolicy = VelocityPolicy.STRICT,
    tol: Optional[float] = None,
) -> np.ndarray:
    """
    Apply the velocity policy to initial conditions.

    Raises:
        ConstraintViolationError: Under the strict policy when ||A(q0) v0||_inf > tol
    """
    policy = VelocityPolicy(policy)
    if policy == VelocityPolicy.PROJECT:
        return np.einsum("...ij,...j->...i", orthogonal_projector_at(sys.g, sys.A, q0), v0)
    tol = settings.constraint_tol if tol is None else tol
    residual = constraint_residual(sys, q0, v0)
    if np.any(residual > tol):
        raise ConstraintViolationError(
            f"Initial velocity violates the constraints of '{sys.name}': "
            f"||A(q0) v0|| = {float(np.max(residual)):.3e} > {tol:.1e}"
        )
    return v0


def _initial_state(sys: NonholonomicSystem, q0: PointLike, v0) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(v0, TangentVector):
        q0, v0 = v0.base, v0.comps
    q0 = as_points(q0)
    v0 = np.asarray(v0, dtype=float)
    if q0.shape[-1] != sys.chart_dim or v0.shape[-1] != sys.chart_dim:
        raise ConfigError(
            f"System '{sys.name}' has dimension {sys.chart_dim}; got q0 {q0.shape} and v0 {v0.shape}"
        )
    q0, v0 = np.broadcast_arrays(q0, v0)
    return np.array(q0), np.array(v0)


def integrate_nh_batch(
    sys: NonholonomicSystem,
    q0: PointLike,
    v0: np.ndarray,
    T: float = 1.0,
    steps: Optional[int] = None,
    record: bool = False,
    policy: VelocityPolicy = VelocityPolicy.STRICT,
    project_each_step: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Integrate nonholonomic geodesics for a batch of initial conditions.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: times, positions and velocities;
        samples carry a leading time axis when record is True
    """
    steps = steps or settings.integrator_steps
    q0, v0 = _initial_state(sys, q0, v0)
    v0 = admissible_velocity(sys, q0, v0, policy)
    post_step = None
    if project_each_step:
        def post_step(q, v):
            return np.einsum("...ij,...j->...i", orthogonal_projector_at(sys.g, sys.A, q), v)

    return rk4_second_order(
        lambda q, v: nh_acceleration(sys, q, v), q0, v0, T, steps, record=record, post_step=post_step
    )


def build_trajectory(g, times: np.ndarray, qs: np.ndarray, vs: np.ndarray, residuals: np.ndarray) -> Trajectory:
    speeds = speed(g, qs, vs)
    return Trajectory(
        times=times,
        q=qs,
        v=vs,
        speeds=speeds,
        constraint_residuals=residuals,
        speed_drift=float(np.max(np.abs(speeds - speeds[0]))),
        max_constraint_residual=float(np.max(residuals)),
    )


def integrate_nh_geodesic(
    sys: NonholonomicSystem,
    q0: PointLike,
    v0: Union[np.ndarray, TangentVector],
    T: float = 1.0,
    steps: Optional[int] = None,
    policy: VelocityPolicy = VelocityPolicy.STRICT,
    project_each_step: bool = False,
) -> Trajectory:
    """
    Integrate the nonholonomic geodesic with initial condition (q0, v0) over [0, T].

    Args:
        sys: Nonholonomic system
        q0: Initial point (n,)
        v0: Initial velocity (n,) in D_q0
        T: Final time (> 0)
        steps: Number of RK4 steps (defaults to settings.integrator_steps)
        policy: "strict" rejects v0 outside D_q0, "project" replaces v0 by P(q0) v0
        project_each_step: Project the velocity onto D after every step

    Returns:
        Trajectory: Samples and diagnostics

    Raises:
        ConstraintViolationError: Strict policy and v0 not in D_q0
        BlowUpError: Non-finite state during integration
    """
    if not T > 0:
        raise ConfigError(f"Integration time must be > 0, got {T}")
    if steps is not None and steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    q0, v0 = _initial_state(sys, q0, v0)
    if q0.ndim != 1:
        raise ConfigError("integrate_nh_geodesic integrates one trajectory; use integrate_nh_batch for batches")
    times, qs, vs = integrate_nh_batch(
        sys, q0, v0, T, steps, record=True, policy=policy, project_each_step=project_each_step
    )
    traj = build_trajectory(sys.g, times, qs, vs, constraint_residual(sys, qs, vs))
    logger.debug(
        f"Integrated '{sys.name}' over T={T} in {len(times) - 1} steps: "
        f"speed drift {traj.speed_drift:.2e}, constraint residual {traj.max_constraint_residual:.2e}"
    )
    return traj


def homothety_residual(
    sys: NonholonomicSystem,
    q0: PointLike,
    v0: np.ndarray,
    scale: float,
    T: float = 1.0,
    steps: Optional[int] = None,
) -> float:
    """
    Sup-norm distance between c_{a v}(t) and c_v(a t) on a common grid.

    c_{a v} is integrated over [0, T / a] and c_v over [0, T] with the same
    number of steps, so sample i of both corresponds to the same point.
    """
    if not scale > 0:
        raise ConfigError(f"Homothety scale must be > 0, got {scale}")
    steps = steps or settings.integrator_steps
    q0 = as_points(q0)
    v0 = np.asarray(v0, dtype=float)
    _, reference, _ = integrate_nh_batch(sys, q0, v0, T, steps, record=True)
    _, scaled, _ = integrate_nh_batch(sys, q0, scale * v0, T / scale, steps, record=True)
    return float(np.max(np.abs(scaled - reference)))


def trajectory_diagnostics(traj: Trajectory, sys: NonholonomicSystem, scale: float = 2.0) -> Tuple[float, float, float]:
    """
    Recompute speed drift and constraint residual along a trajectory and the
    reparametrization residual of its initial condition for the given scale.

    Returns:
        Tuple[float, float, float]: (speed_drift, max_constraint_residual, reparam_residual)
    """
    if len(traj) == 0:
        raise ConfigError("Empty trajectory")
    speeds = speed(sys.g, traj.q, traj.v)
    drift = float(np.max(np.abs(speeds - speeds[0])))
    residual = float(np.max(constraint_residual(sys, traj.q, traj.v)))
    if len(traj) < 2:
        return drift, residual, 0.0
    reparam = homothety_residual(sys, traj.q[0], traj.v[0], scale, float(traj.times[-1]), len(traj) - 1)
    return drift, residual, reparam
