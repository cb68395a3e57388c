"""
The nonholonomic exponential map exp^nh_q on a starshaped patch of D_q:
evaluation, tangent map, Newton inverse on selected ambient coordinates,
and the rescaling and tangent-map checks.
"""

import logging
from dataclasses import replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from nhgeo.core.config import settings
from nhgeo.core.errors import ConfigError, ConvergenceError, DomainError, NumericalError
from nhgeo.models.geometry import (
    ChartPoint,
    DomainSpec,
    ExpMapPatch,
    InverseResult,
    NonholonomicSystem,
    TangentChart,
)
from nhgeo.services.dynamics_service import integrate_nh_batch
from nhgeo.services.geometry_service import as_points, constraint_at, distribution_basis
from nhgeo.utils.linalg import solve
from nhgeo.utils.newton import damped_newton
from nhgeo.utils.numdiff import central_jacobian

logger = logging.getLogger(__name__)

BASIS_TOL = 1e-12
ROUND_TRIP_TOL = 1e-8

FiberMap = Callable[[np.ndarray], np.ndarray]


def make_tangent_chart(
    sys: NonholonomicSystem,
    base,
    basis: Optional[np.ndarray] = None,
    labels: Sequence[str] = (),
) -> TangentChart:
    """
    Identify D_base with R^k.

    Args:
        sys: Nonholonomic system
        base: Base point
        basis: n x k matrix whose columns span D_base; a g-orthonormal basis is derived when omitted
        labels: Names of the fiber coordinates

    Raises:
        ConfigError: If a basis column is not annihilated by A(base)
    """
    base = base if isinstance(base, ChartPoint) else ChartPoint(base)
    if basis is None:
        basis = distribution_basis(sys.g, sys.A, base)
    basis = np.asarray(basis, dtype=float)
    if basis.shape != (sys.chart_dim, sys.rank):
        raise ConfigError(f"Basis of D must have shape {(sys.chart_dim, sys.rank)}, got {basis.shape}")
    if sys.A.corank:
        residual = float(np.max(np.abs(constraint_at(sys.A, base) @ basis)))
        if residual > BASIS_TOL:
            raise ConfigError(f"Basis columns are not in D at the base point (||A basis|| = {residual:.2e})")
    return TangentChart(base=base, basis=basis, labels=tuple(labels))


def _check_domain(patch: ExpMapPatch, w: np.ndarray, what: str = "point") -> None:
    inside = patch.domain.contains(w)
    if not np.all(inside):
        bad = np.asarray(w).reshape(-1, patch.k)[~np.asarray(inside).reshape(-1)][0]
        raise DomainError(
            f"{what.capitalize()} {np.round(bad, 12).tolist()} lies outside the exponential-map domain "
            f"{patch.domain.describe()}"
        )


def _as_fiber(patch: ExpMapPatch, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1:] != (patch.k,):
        raise ConfigError(f"Expected fiber coordinates with last axis {patch.k}, got shape {w.shape}")
    return w


def exp_nh_state(
    patch: ExpMapPatch, w, check_domain: bool = True, steps: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Endpoints and final velocities at t = 1 of the trajectories with initial velocities w."""
    w = _as_fiber(patch, w)
    if check_domain:
        _check_domain(patch, w)
    base = np.broadcast_to(patch.base, w.shape[:-1] + (patch.sys.chart_dim,))
    if not np.any(w):
        return base.copy(), np.zeros_like(base)
    _, q, v = integrate_nh_batch(
        patch.sys, base, patch.chart.to_velocity(w), 1.0, steps or patch.steps, record=False
    )
    zero = ~np.any(w != 0.0, axis=-1)
    q[zero] = base[zero]
    return q, v


def exp_nh(patch: ExpMapPatch, w, check_domain: bool = True) -> np.ndarray:
    """
    Nonholonomic exponential map: time-1 point of the trajectory with initial velocity sum_i w_i basis_i.

    Args:
        patch: Exponential-map patch
        w: Fiber coordinates (..., k)
        check_domain: Reject points outside the patch domain

    Returns:
        np.ndarray: Points (..., n); the base point exactly for w = 0

    Raises:
        DomainError: If w is outside the domain
        BlowUpError: If the integration blows up
    """
    return exp_nh_state(patch, w, check_domain)[0]


def exp_nh_jacobian(
    patch: ExpMapPatch, w, step: Optional[float] = None, order: int = 2, check_domain: bool = True
) -> np.ndarray:
    """
    Central-difference tangent map of exp_nh, shape (..., n, k).

    Raises:
        DomainError: If a stencil point leaves the domain
    """
    w = _as_fiber(patch, w)
    step = step or settings.jacobian_step
    check = (lambda pts: _check_domain(patch, pts, "stencil point")) if check_domain else None
    return central_jacobian(lambda x: exp_nh(patch, x, check_domain=False), w, step, order=order, check=check)


def tangent_map_residual(patch: ExpMapPatch, step: Optional[float] = None) -> float:
    """||T_0 exp_nh - basis||_inf; the tangent map at 0 is the inclusion of D_q."""
    jac = exp_nh_jacobian(patch, np.zeros(patch.k), step=step)
    return float(np.max(np.abs(jac - patch.chart.basis)))


def velocity_identity_residual(patch: ExpMapPatch, w, step: Optional[float] = None) -> float:
    """max ||J(w) w - c'_w(1)||_inf: the tangent map along w gives the final velocity."""
    w = _as_fiber(patch, w)
    jac = exp_nh_jacobian(patch, w, step=step)
    _, velocity = exp_nh_state(patch, w)
    return float(np.max(np.abs(np.einsum("...ij,...j->...i", jac, w) - velocity)))


def rescaling_residual(patch: ExpMapPatch, w, t_grid: Optional[np.ndarray] = None) -> float:
    """
    max_t ||exp_nh(t w) - c_w(t)||_inf with c_w a single integration sampled on t_grid.

    Grid times off the integrator lattice are reached by one extra RK4 step
    from the preceding sample.
    """
    w = _as_fiber(patch, w)
    if w.ndim != 1:
        raise ConfigError("rescaling_residual takes a single fiber vector")
    t_grid = np.linspace(0.0, 1.0, 11) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0.0) or np.any(t_grid > 1.0):
        raise ConfigError("Rescaling grid times must lie in [0, 1]")
    _check_domain(patch, w)
    if not np.any(w):
        return 0.0

    steps = patch.steps
    _, qs, vs = integrate_nh_batch(patch.sys, patch.base, patch.chart.to_velocity(w), 1.0, steps, record=True)
    sampled = []
    for t in t_grid:
        position = t * steps
        index = int(np.floor(position + 1e-9))
        remainder = (position - index) / steps
        if remainder <= 1e-12:
            sampled.append(qs[index])
        else:
            _, q_t, _ = integrate_nh_batch(patch.sys, qs[index], vs[index], remainder, 1, record=False)
            sampled.append(q_t)
    along = exp_nh(patch, t_grid[:, None] * w[None, :])
    return float(np.max(np.abs(along - np.stack(sampled))))


# ============================================================================
# INVERSION
# ============================================================================

def _selection(patch: ExpMapPatch, select: Sequence[int]) -> np.ndarray:
    select = np.asarray(tuple(select), dtype=int)
    n = patch.sys.chart_dim
    if select.size != patch.k or len(set(select.tolist())) != select.size or np.any((select < 0) | (select >= n)):
        raise ConfigError(f"Selection {select.tolist()} must name {patch.k} distinct coordinates among 0..{n - 1}")
    return select


def _solve_selected(
    patch: ExpMapPatch,
    y: np.ndarray,
    select: np.ndarray,
    w0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    step: Optional[float] = None,
    exp_map: Optional[FiberMap] = None,
    exp_jacobian: Optional[FiberMap] = None,
):
    """
    Damped Newton for selected(exp_nh(w)) = y over a batch of targets y (..., k).

    `exp_map` and `exp_jacobian` replace the integrated map and its
    finite-difference tangent map when closed forms are known.
    """
    y = np.asarray(y, dtype=float)
    targets = y.reshape(-1, patch.k)
    if w0 is None:
        # linear guess from the inclusion T_0 exp_nh = basis
        rows = patch.chart.basis[select]
        w0 = solve(np.broadcast_to(rows, targets.shape + (patch.k,)), targets - patch.base[select], "selected basis rows")
    else:
        w0 = np.broadcast_to(np.asarray(w0, dtype=float), y.shape).reshape(-1, patch.k)
    step = step or settings.jacobian_step

    def selected(w):
        if exp_map is not None:
            return np.asarray(exp_map(w), dtype=float)[..., select]
        return exp_nh(patch, w, check_domain=False)[..., select]

    def residual_fn(w, rows):
        return selected(w) - targets[rows]

    def jacobian_fn(w, rows):
        if exp_jacobian is not None:
            return np.asarray(exp_jacobian(w), dtype=float)[..., select, :]
        return central_jacobian(selected, w, step)

    return damped_newton(
        residual_fn,
        jacobian_fn,
        w0,
        tol=tol or settings.newton_tol,
        max_iter=max_iter or settings.newton_max_iter,
        what="exp_nh inverse",
    )


def exp_nh_inverse(
    patch: ExpMapPatch,
    target,
    select: Sequence[int],
    w0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> InverseResult:
    """
    Recover fiber coordinates w from the selected ambient coordinates of a target.

    Args:
        patch: Exponential-map patch
        target: Points (..., n); only the selected coordinates drive the iteration
        select: k distinct ambient coordinate indices
        w0: Optional initial guess (defaults to the linearization at 0)
        max_iter: Newton iteration cap (settings.newton_max_iter)
        tol: Threshold on the selected residual (settings.newton_tol)

    Returns:
        InverseResult: w, selected and full residuals; the full residual
        vanishes iff the target lies on the image of exp_nh

    Raises:
        ConvergenceError: If Newton does not reach tol within max_iter
        SingularMatrixError: If a selected Jacobian is singular
    """
    target = as_points(target)
    select = _selection(patch, select)
    outcome = _solve_selected(patch, target[..., select], select, w0, max_iter, tol)
    w = outcome.w.reshape(target.shape[:-1] + (patch.k,))
    selected_residual = np.max(np.abs(outcome.residual), axis=-1).reshape(target.shape[:-1])
    if not outcome.converged:
        raise ConvergenceError(
            f"Newton inversion of exp_nh did not converge in {outcome.iterations} iterations "
            f"(max selected residual {float(np.max(selected_residual)):.3e})"
        )
    full_residual = np.max(np.abs(exp_nh(patch, w, check_domain=False) - target), axis=-1)
    logger.debug(f"exp_nh inverse converged in {outcome.iterations} iterations")
    return InverseResult(
        w=w,
        selected_residual=selected_residual,
        full_residual=full_residual,
        iterations=outcome.iterations,
        converged=True,
    )


def round_trip_residual(patch: ExpMapPatch, w, select: Sequence[int]) -> float:
    """max ||exp_nh_inverse(exp_nh(w)) - w||_inf over a batch of fiber points."""
    w = _as_fiber(patch, w)
    result = exp_nh_inverse(patch, exp_nh(patch, w), select)
    return float(np.max(np.abs(result.w - w)))


def _radial_samples(domain: DomainSpec, k: int, samples: int) -> np.ndarray:
    if k == 1:
        directions = np.array([[1.0], [-1.0]])
    elif k == 2:
        angles = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    else:
        eye = np.eye(k)
        diagonal = np.ones((1, k)) / np.sqrt(k)
        directions = np.concatenate([eye, -eye, diagonal, -diagonal])
    reach = domain.radius * (1.0 - domain.margin)
    if domain.kind == "ball":
        return reach * directions / domain.norm_of(directions)[:, None]
    points = reach * directions
    return points[domain.contains(points)]


def validate_domain(
    patch: ExpMapPatch,
    select: Sequence[int],
    samples: int = 8,
    max_shrinks: int = 5,
    tol: float = ROUND_TRIP_TOL,
) -> ExpMapPatch:
    """
    Confirm Newton round trips on radial samples near the domain edge.

    Each failure shrinks the domain by 10% with a logged warning.

    Returns:
        ExpMapPatch: The patch, possibly with a smaller domain

    Raises:
        ConvergenceError: If round trips still fail after max_shrinks shrinks
    """
    for attempt in range(max_shrinks + 1):
        points = _radial_samples(patch.domain, patch.k, samples)
        try:
            error = round_trip_residual(patch, points, select)
            if error <= tol:
                return patch
            reason = f"round-trip error {error:.2e}"
        except NumericalError as e:
            reason = str(e)
        if attempt == max_shrinks:
            break
        shrunk = patch.domain.scaled(0.9)
        logger.warning(
            f"Exponential-map domain {patch.domain.describe()} failed validation ({reason}); "
            f"shrinking to {shrunk.describe()}"
        )
        patch = replace(patch, domain=shrunk)
    raise ConvergenceError(f"Could not validate an exponential-map domain after {max_shrinks} shrinks")


class InducedChart:
    """
    Coordinates y = selected(exp_nh(w)) on the image of the exponential map.

    Args:
        patch: Exponential-map patch
        select: Ambient coordinate indices used as coordinates on the image
        jacobian_step: Step of the finite-difference tangent map
        exp_map: Optional closed form of exp_nh on fiber coordinates
        exp_jacobian: Optional closed form of its tangent map (..., n, k)
    """

    def __init__(
        self,
        patch: ExpMapPatch,
        select: Sequence[int],
        jacobian_step: Optional[float] = None,
        exp_map: Optional[FiberMap] = None,
        exp_jacobian: Optional[FiberMap] = None,
    ):
        if (exp_map is None) != (exp_jacobian is None):
            raise ConfigError("A closed-form exponential needs its closed-form Jacobian and vice versa")
        self.patch = patch
        self.select = _selection(patch, select)
        self.jacobian_step = jacobian_step or settings.jacobian_step
        self.exp_map = exp_map
        self.exp_jacobian = exp_jacobian

    @property
    def k(self) -> int:
        return self.patch.k

    @property
    def closed_form(self) -> bool:
        return self.exp_map is not None

    def forward(self, w) -> np.ndarray:
        if self.exp_map is not None:
            w = _as_fiber(self.patch, w)
            _check_domain(self.patch, w)
            return np.asarray(self.exp_map(w), dtype=float)[..., self.select]
        return exp_nh(self.patch, w)[..., self.select]

    def jacobian(self, w) -> np.ndarray:
        """d y / d w, shape (..., k, k)."""
        if self.exp_jacobian is not None:
            return np.asarray(self.exp_jacobian(_as_fiber(self.patch, w)), dtype=float)[..., self.select, :]
        jac = exp_nh_jacobian(self.patch, w, step=self.jacobian_step, check_domain=False)
        return jac[..., self.select, :]

    def inverse(self, y) -> np.ndarray:
        """
        Fiber coordinates of induced coordinates y (..., k).

        Raises:
            ConvergenceError: If Newton does not converge
        """
        y = np.asarray(y, dtype=float)
        outcome = _solve_selected(
            self.patch,
            y,
            self.select,
            step=self.jacobian_step,
            exp_map=self.exp_map,
            exp_jacobian=self.exp_jacobian,
        )
        if not outcome.converged:
            raise ConvergenceError(
                f"Induced-chart inversion did not converge (max residual {float(np.max(np.abs(outcome.residual))):.3e})"
            )
        return outcome.w.reshape(y.shape)
