"""
Unconstrained Riemannian machinery on coordinate domains: geodesics, the
exponential map and its inverse, radial functions, discrete curve length
and its minimization, and the Gauss' lemma and line-geodesic checks.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from nhgeo.core.config import settings
from nhgeo.core.errors import ConfigError, ConvergenceError
from nhgeo.models.geometry import (
    DiscreteCurve,
    MetricField,
    MinimizationResult,
    MinimizeOptions,
    Trajectory,
)
from nhgeo.services.geometry_service import PointLike, as_points, christoffel_at, geodesic_spray, metric_at
from nhgeo.utils.integrators import rk4_second_order
from nhgeo.utils.linalg import quadratic_form
from nhgeo.utils.newton import damped_newton
from nhgeo.utils.numdiff import central_jacobian

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60


# ============================================================================
# GEODESICS AND EXPONENTIAL MAP
# ============================================================================

def geodesic_acceleration(metric: MetricField, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return -geodesic_spray(christoffel_at(metric, q), v)


def integrate_geodesic(
    metric: MetricField, q0: PointLike, v0: np.ndarray, T: float = 1.0, steps: Optional[int] = None
) -> Trajectory:
    """
    Integrate q''^k = -Gamma^k_ij q'^i q'^j with RK4.

    Args:
        metric: Metric field (PD, or invertible under the allow-indefinite policy)
        q0: Initial point (n,)
        v0: Initial velocity (n,)
        T: Final time (> 0)
        steps: Number of steps (settings.integrator_steps)

    Returns:
        Trajectory: Samples and speed diagnostics (constraint residuals are zero)

    Raises:
        NotPositiveDefiniteError: If a PD metric loses definiteness along the path
        BlowUpError: If the state becomes non-finite
    """
    if not T > 0:
        raise ConfigError(f"Integration time must be > 0, got {T}")
    steps = steps or settings.integrator_steps
    q0 = as_points(q0)
    v0 = np.asarray(v0, dtype=float)
    times, qs, vs = rk4_second_order(lambda q, v: geodesic_acceleration(metric, q, v), q0, v0, T, steps)
    speeds = np.sqrt(np.abs(quadratic_form(metric_at(metric, qs, check=False), vs, vs)))
    return Trajectory(
        times=times,
        q=qs,
        v=vs,
        speeds=speeds,
        constraint_residuals=np.zeros(times.size),
        speed_drift=float(np.max(np.abs(speeds - speeds[0]))),
        max_constraint_residual=0.0,
    )


def riemannian_exp(metric: MetricField, base: PointLike, v: np.ndarray, steps: Optional[int] = None) -> np.ndarray:
    """
    Riemannian exponential at base for a batch of velocities (..., n).

    Returns the base point exactly for v = 0.
    """
    v = np.asarray(v, dtype=float)
    base = np.broadcast_to(as_points(base), v.shape)
    if not np.any(v):
        return base.copy()
    _, q, _ = rk4_second_order(
        lambda x, y: geodesic_acceleration(metric, x, y), base, v, 1.0, steps or settings.integrator_steps, record=False
    )
    return q


def riemannian_log(
    metric: MetricField,
    base: PointLike,
    p: np.ndarray,
    steps: Optional[int] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    step: Optional[float] = None,
) -> np.ndarray:
    """
    Inverse of riemannian_exp at base by damped Newton, starting from p - base.

    Raises:
        ConvergenceError: If Newton does not converge
    """
    base = as_points(base)
    p = np.asarray(p, dtype=float)
    targets = p.reshape(-1, p.shape[-1])
    step = step or settings.jacobian_step

    def exp_at(v):
        return riemannian_exp(metric, base, v, steps)

    outcome = damped_newton(
        lambda v, rows: exp_at(v) - targets[rows],
        lambda v, rows: central_jacobian(exp_at, v, step),
        targets - base,
        tol=tol or settings.newton_tol,
        max_iter=max_iter or settings.newton_max_iter,
        what="riemannian_log",
    )
    if not outcome.converged:
        raise ConvergenceError(
            f"Riemannian log did not converge (max residual {float(np.max(np.abs(outcome.residual))):.3e})"
        )
    return outcome.w.reshape(p.shape)


def standard_radial_function(
    metric: MetricField, base: PointLike, p: np.ndarray, steps: Optional[int] = None
) -> np.ndarray:
    """||exp^-1(p)|| measured in metric(base)."""
    base = as_points(base)
    v = riemannian_log(metric, base, p, steps)
    return np.sqrt(quadratic_form(metric_at(metric, base), v, v))


def gauss_lemma_residual(
    metric: MetricField,
    base: PointLike,
    v: np.ndarray,
    w: np.ndarray,
    fd_step: Optional[float] = None,
    steps: Optional[int] = None,
) -> np.ndarray:
    """
    |g(exp(v))(J v, J w) - g(base)(v, w)| with J the finite-difference tangent map of exp at v.

    Holds for every metric on the domain where exp is defined.
    """
    base = as_points(base)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    step = fd_step or settings.nested_fd_step

    def exp_at(x):
        return riemannian_exp(metric, base, x, steps)

    jac = central_jacobian(exp_at, v, step)
    image = exp_at(v)
    jv = np.einsum("...ij,...j->...i", jac, v)
    jw = np.einsum("...ij,...j->...i", jac, w)
    lhs = quadratic_form(metric_at(metric, image), jv, jw)
    rhs = quadratic_form(metric_at(metric, base), v, w)
    return np.abs(lhs - rhs)


def line_geodesic_residual(metric: MetricField, w: np.ndarray, t_grid: Optional[np.ndarray] = None) -> float:
    """
    max over t of ||Gamma(t w)(w, w)||_inf along lines t -> t w.

    Args:
        metric: Metric on R^k
        w: Direction (k,) or batch of directions (M, k)
        t_grid: Times in [0, 1] (21 points by default)
    """
    t_grid = np.linspace(0.0, 1.0, 21) if t_grid is None else np.asarray(t_grid, dtype=float)
    w = np.atleast_2d(np.asarray(w, dtype=float))
    points = t_grid[:, None, None] * w[None, :, :]
    spray = geodesic_spray(christoffel_at(metric, points), np.broadcast_to(w, points.shape))
    return float(np.max(np.abs(spray)))


# ============================================================================
# CURVES
# ============================================================================

def _segment_terms(metric: MetricField, a: np.ndarray, b: np.ndarray, objective: str, n_segments: int) -> np.ndarray:
    delta = b - a
    squared = quadratic_form(metric_at(metric, 0.5 * (a + b)), delta, delta)
    if objective == "energy":
        return n_segments * squared
    return np.sqrt(np.maximum(squared, 0.0))


def curve_length(metric: MetricField, curve: DiscreteCurve) -> float:
    """
    Midpoint-rule length: sum of segment norms measured at segment midpoints.

    Raises:
        NotPositiveDefiniteError: If the metric is not PD at a midpoint
    """
    nodes = curve.nodes
    return float(np.sum(_segment_terms(metric, nodes[:-1], nodes[1:], "length", len(curve) - 1)))


def curve_energy(metric: MetricField, curve: DiscreteCurve) -> float:
    """(N - 1) * sum of squared segment norms; equals length^2 for uniform-speed curves."""
    nodes = curve.nodes
    return float(np.sum(_segment_terms(metric, nodes[:-1], nodes[1:], "energy", len(curve) - 1)))


def sup_distance_to_segment(curve: DiscreteCurve, a: np.ndarray, b: np.ndarray) -> float:
    """Largest Euclidean distance from a node to the segment [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    direction = b - a
    length_sq = float(direction @ direction)
    rel = curve.nodes - a
    if length_sq == 0.0:
        return float(np.max(np.linalg.norm(rel, axis=-1)))
    t = np.clip(rel @ direction / length_sq, 0.0, 1.0)
    return float(np.max(np.linalg.norm(rel - t[:, None] * direction, axis=-1)))


def perturbed_line(
    a: np.ndarray,
    b: np.ndarray,
    nodes: int,
    amplitude: float,
    rng: Optional[np.random.Generator] = None,
) -> DiscreteCurve:
    """
    Straight line from a to b bent by a sinusoidal bump amplitude * sin(pi t).

    The bump is transverse to the line: along the first coordinate axis least
    aligned with it, or along a random transverse direction drawn from rng.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if nodes < 2:
        raise ConfigError(f"A curve needs >= 2 nodes, got {nodes}")
    direction = b - a
    k = a.size
    t = np.linspace(0.0, 1.0, nodes)
    line = a[None, :] + t[:, None] * direction[None, :]
    if k == 1:
        return DiscreteCurve(nodes=line)
    if rng is not None:
        normal = rng.standard_normal(k)
    else:
        normal = np.zeros(k)
        normal[int(np.argmin(np.abs(direction)))] = 1.0
    norm_sq = float(direction @ direction)
    if norm_sq > 0.0:
        normal = normal - (normal @ direction) / norm_sq * direction
    normal = normal / np.linalg.norm(normal)
    return DiscreteCurve(nodes=line + amplitude * np.sin(np.pi * t)[:, None] * normal[None, :])


def _objective(metric: MetricField, nodes: np.ndarray, objective: str) -> float:
    n_segments = nodes.shape[0] - 1
    return float(np.sum(_segment_terms(metric, nodes[:-1], nodes[1:], objective, n_segments)))


def _local_gradient(metric: MetricField, nodes: np.ndarray, objective: str, h: float) -> np.ndarray:
    """
    Central-difference gradient with respect to the interior nodes.

    Moving node i only changes the two segments adjacent to it, so all
    partials are evaluated as one batch of 2 * 2k segment pairs.
    """
    n_segments = nodes.shape[0] - 1
    k = nodes.shape[1]
    interior = nodes[1:-1]
    offsets = h * np.eye(k)
    shifted = np.stack([interior[:, None, :] + offsets, interior[:, None, :] - offsets])  # (2, M, k, k)
    prev = nodes[:-2][None, :, None, :]
    nxt = nodes[2:][None, :, None, :]
    terms = _segment_terms(metric, prev, shifted, objective, n_segments) + _segment_terms(
        metric, shifted, nxt, objective, n_segments
    )
    return (terms[0] - terms[1]) / (2.0 * h)


def _resample_uniform(metric: MetricField, nodes: np.ndarray) -> np.ndarray:
    """Redistribute nodes along the polyline at equal metric arc length."""
    seg = _segment_terms(metric, nodes[:-1], nodes[1:], "length", nodes.shape[0] - 1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] <= 0.0:
        return nodes
    target = np.linspace(0.0, arc[-1], nodes.shape[0])
    resampled = np.stack([np.interp(target, arc, nodes[:, d]) for d in range(nodes.shape[1])], axis=-1)
    resampled[0], resampled[-1] = nodes[0], nodes[-1]
    return resampled


def minimize_length(
    metric: MetricField,
    endpoints: Optional[Tuple[np.ndarray, np.ndarray]],
    init: DiscreteCurve,
    options: Optional[MinimizeOptions] = None,
) -> MinimizationResult:
    """
    Minimize the discrete length (or energy) over the interior nodes of a curve.

    Gradient descent with Barzilai-Borwein step lengths and Armijo
    backtracking; every accepted step lowers the objective.

    Args:
        metric: Metric on R^k
        endpoints: Endpoints that init must start and end at, or None to take init's
        init: Initial curve; its endpoints stay fixed
        options: Objective, iteration cap, gradient tolerance, FD step, resampling

    Returns:
        MinimizationResult: Optimized curve, per-iteration lengths and status;
        non-convergence is reported in the status, not raised
    """
    options = options or MinimizeOptions()
    if not (init.fixed_start and init.fixed_end):
        raise ConfigError("minimize_length keeps both endpoints fixed")
    if endpoints is not None:
        start, end = (np.asarray(e, dtype=float) for e in endpoints)
        if not (np.allclose(init.start, start, atol=1e-12) and np.allclose(init.end, end, atol=1e-12)):
            raise ConfigError("Initial curve does not join the requested endpoints")

    x = init.nodes.copy()
    initial_length = curve_length(metric, init)
    lengths = [initial_length]
    if x.shape[0] < 3:
        return MinimizationResult(init, np.array(lengths), 0, True, "converged", 0.0)

    f = _objective(metric, x, options.objective)
    grad = _local_gradient(metric, x, options.objective, options.fd_step)
    scale = float(np.mean(np.linalg.norm(np.diff(x, axis=0), axis=-1))) or 1.0
    alpha = 0.1 * scale / max(float(np.max(np.abs(grad))), 1e-300)
    x_prev = grad_prev = None
    status = "max_iters"
    iterations = 0

    for iterations in range(options.max_iters):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < options.grad_tol:
            status = "converged"
            break
        if x_prev is not None:
            s = (x - x_prev)[1:-1]
            y = grad - grad_prev
            sy = float(np.sum(s * y))
            if sy > 0.0:
                alpha = float(np.sum(s * s)) / sy
        alpha = min(max(alpha, 1e-12), 1e3)

        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = x.copy()
            trial[1:-1] -= alpha * grad
            f_trial = _objective(metric, trial, options.objective)
            if f_trial <= f - ARMIJO_C * alpha * float(np.sum(grad * grad)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            status = "stalled"
            logger.debug(f"Line search stalled at iteration {iterations} (gradient {grad_norm:.3e})")
            break

        x_prev, grad_prev = x, grad
        x, f = trial, f_trial
        grad = _local_gradient(metric, x, options.objective, options.fd_step)
        lengths.append(_objective(metric, x, "length"))
        if iterations % 500 == 0:
            logger.debug(f"minimize_length iteration {iterations}: length {lengths[-1]:.12g}, gradient {grad_norm:.3e}")
    else:
        iterations = options.max_iters

    grad_norm = float(np.max(np.abs(grad)))
    converged = status == "converged" or grad_norm < options.grad_tol
    if converged:
        status = "converged"
    else:
        logger.warning(f"Length minimization stopped ({status}) with gradient norm {grad_norm:.3e}")

    if lengths[-1] > initial_length:
        # only possible for the energy objective
        x = init.nodes.copy()
        lengths.append(initial_length)
    if options.resample and options.objective == "length":
        resampled = _resample_uniform(metric, x)
        resampled_length = _objective(metric, resampled, "length")
        if resampled_length <= lengths[-1]:
            x = resampled
            lengths[-1] = resampled_length

    return MinimizationResult(
        curve=DiscreteCurve(nodes=x),
        lengths=np.array(lengths),
        iterations=iterations,
        converged=converged,
        status=status,
        grad_norm=grad_norm,
    )
