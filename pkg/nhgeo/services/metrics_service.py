"""
Metrics on R^k (identified with a fiber D_q): the Gauss condition and its
sweep, the radial distance and its gradient, pullbacks and pushforwards,
and the construction of Gauss metrics from an arbitrary metric.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from nhgeo.core.config import settings
from nhgeo.core.errors import ConfigError, DomainError, NotPositiveDefiniteError
from nhgeo.models.geometry import DomainSpec, MetricField, VectorMetric
from nhgeo.models.models import GaussReport
from nhgeo.services.expmap_service import InducedChart
from nhgeo.services.geometry_service import christoffel_at, geodesic_spray, metric_at
from nhgeo.services.riemannian_service import riemannian_exp
from nhgeo.utils.integrators import rk4_first_order
from nhgeo.utils.linalg import check_positive_definite, inverse, quadratic_form, solve, symmetrize
from nhgeo.utils.numdiff import central_jacobian, central_partials, directional_derivative

logger = logging.getLogger(__name__)

EXACT_GAUSS_TOL = 1e-8
FD_GAUSS_TOL = 1e-6
# finite-difference settings for metrics built from integrated maps
INTEGRATED_JACOBIAN_STEP = 1e-3
INTEGRATED_CHRISTOFFEL_STEP = 1e-2
ANALYTIC_JACOBIAN_CHRISTOFFEL_STEP = 1e-3


# ============================================================================
# CONSTRUCTORS
# ============================================================================

def flat_metric(k: int, matrix: Optional[np.ndarray] = None, domain: Optional[DomainSpec] = None, name: str = "flat") -> VectorMetric:
    """Constant metric (identity by default) on R^k."""
    matrix = np.eye(k) if matrix is None else symmetrize(np.asarray(matrix, dtype=float))
    if matrix.shape != (k, k):
        raise ConfigError(f"Constant metric must be {k}x{k}, got {matrix.shape}")

    def evaluate(w):
        return np.broadcast_to(matrix, np.shape(w)[:-1] + (k, k)).copy()

    def partials(w):
        return np.zeros(np.shape(w)[:-1] + (k, k, k))

    return VectorMetric(dim=k, evaluate=evaluate, partials=partials, name=name, domain=domain or DomainSpec.ball(1.0))


def conformal_metric(coeffs: Sequence[float], domain: Optional[DomainSpec] = None) -> VectorMetric:
    """exp(2 <a, w>) Id with analytic partials."""
    a = np.asarray(coeffs, dtype=float)
    k = a.size

    def factor(w):
        return np.exp(2.0 * np.asarray(w, dtype=float) @ a)

    def evaluate(w):
        return factor(w)[..., None, None] * np.eye(k)

    def partials(w):
        return 2.0 * factor(w)[..., None, None, None] * a[:, None, None] * np.eye(k)

    label = ",".join(f"{c:g}" for c in a)
    return VectorMetric(
        dim=k, evaluate=evaluate, partials=partials, name=f"conformal:{label}", domain=domain or DomainSpec.ball(0.5)
    )


def pullback_metric(
    phi: Callable[[np.ndarray], np.ndarray],
    h: MetricField,
    k: int,
    domain: DomainSpec,
    fd_step: Optional[float] = None,
    order: int = 2,
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    name: str = "pullback",
    analytic: Optional[bool] = None,
    christoffel_step: Optional[float] = None,
) -> VectorMetric:
    """
    Pullback G(w) = J(w)^T h(phi(w)) J(w) of an ambient metric through phi: R^k -> R^n.

    Args:
        phi: Batched map (..., k) -> (..., n)
        h: Ambient metric field (indefinite allowed when its policy says so)
        k: Source dimension
        domain: Domain of phi; finite-difference stencils must stay inside it
        fd_step: Step of the finite-difference Jacobian (settings.jacobian_step)
        order: Stencil order of that Jacobian
        jacobian: Optional analytic Jacobian (..., k) -> (..., n, k)
        name: Metric name used in reports
        analytic: Whether values are exact to roundoff (defaults to jacobian is not None)
        christoffel_step: Finite-difference step for derivatives of the result

    Returns:
        VectorMetric: Symmetrized pullback

    Raises:
        DomainError: If a stencil point leaves the domain
    """
    step = fd_step or settings.jacobian_step

    def check(points):
        inside = domain.contains(points)
        if not np.all(inside):
            raise DomainError(f"Pullback stencil leaves the domain {domain.describe()}")

    def evaluate(w):
        w = np.asarray(w, dtype=float)
        check(w)
        if jacobian is not None:
            jac = np.asarray(jacobian(w), dtype=float)
        else:
            jac = central_jacobian(phi, w, step, order=order, check=check)
        ambient = metric_at(h, phi(w))
        return symmetrize(np.swapaxes(jac, -1, -2) @ ambient @ jac)

    if analytic is None:
        analytic = jacobian is not None
    if christoffel_step is None:
        christoffel_step = ANALYTIC_JACOBIAN_CHRISTOFFEL_STEP if analytic else INTEGRATED_CHRISTOFFEL_STEP
    return VectorMetric(
        dim=k,
        evaluate=evaluate,
        name=name,
        domain=domain,
        analytic=analytic,
        fd_step=christoffel_step,
        fd_order=4,
    )


def pushforward_metric(G: VectorMetric, chart: InducedChart, name: str = "pushforward") -> VectorMetric:
    """
    ((psi)^-1)* G in induced coordinates y = psi(w).

    g(y) = J(w)^-T G(w) J(w)^-1 with w = psi^-1(y) and J the tangent map of psi.
    """

    def evaluate(y):
        w = chart.inverse(y)
        jinv = inverse(chart.jacobian(w), what="induced-chart Jacobian")
        return symmetrize(np.swapaxes(jinv, -1, -2) @ metric_at(G, w) @ jinv)

    return VectorMetric(
        dim=G.dim,
        evaluate=evaluate,
        name=name,
        domain=None,
        analytic=False,
        fd_step=INTEGRATED_CHRISTOFFEL_STEP,
        fd_order=4,
    )


def gauss_metric_from_ambient(
    Gbar: VectorMetric, domain: Optional[DomainSpec] = None, steps: int = 200, name: Optional[str] = None
) -> VectorMetric:
    """
    (exp^Gbar_0)* Gbar, which satisfies the Gauss condition wherever exp^Gbar_0 is a diffeomorphism.

    Args:
        Gbar: Arbitrary metric on R^k, PD near 0
        domain: Domain of the result (Gbar's domain by default)
        steps: Integrator steps of the geodesics defining the exponential
        name: Metric name used in reports

    Raises:
        BlowUpError: If a geodesic blows up
    """
    domain = domain or Gbar.domain or DomainSpec.ball(0.5)
    origin = np.zeros(Gbar.dim)

    def phi(w):
        return riemannian_exp(Gbar, origin, w, steps)

    return pullback_metric(
        phi,
        Gbar,
        Gbar.dim,
        domain,
        fd_step=INTEGRATED_JACOBIAN_STEP,
        order=4,
        name=name or f"remark21:{Gbar.name}",
        analytic=False,
    )


# ============================================================================
# GAUSS CONDITION
# ============================================================================

def gauss_residual(G: VectorMetric, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """G(w)(w, z) - G(0)(w, z), batched over w and z."""
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    g0 = metric_at(G, np.zeros(G.dim))
    return quadratic_form(metric_at(G, w), w, z) - quadratic_form(g0, w, z)


def default_gauss_tolerance(G: VectorMetric) -> float:
    return EXACT_GAUSS_TOL if G.analytic else FD_GAUSS_TOL


def check_gauss(
    G: VectorMetric,
    grid: int = 21,
    tol: Optional[float] = None,
    domain: Optional[DomainSpec] = None,
) -> GaussReport:
    """
    Sweep the Gauss residual over a product grid and the canonical basis.

    Args:
        G: Metric on R^k
        grid: Points per axis
        tol: Verdict threshold (1e-8 for analytic metrics, 1e-6 otherwise)
        domain: Sweep domain (G's domain by default)

    Returns:
        GaussReport: Max residual with its location and verdict; a PD failure
        gives the verdict NOT_RIEMANNIAN_ON_DOMAIN with its location
    """
    domain = domain or G.domain
    if domain is None:
        raise ConfigError(f"Metric '{G.name}' has no domain; pass one to check_gauss")
    tol = tol or default_gauss_tolerance(G)
    nodes = domain.grid(grid, G.dim)
    report = dict(metric=G.name, domain=domain.describe(), grid=grid, nodes=int(nodes.shape[0]), tolerance=tol)

    try:
        matrices = metric_at(G, nodes, check=False)
        g0 = metric_at(G, np.zeros(G.dim), check=False)
        check_positive_definite(g0, np.zeros(G.dim), what=f"Metric '{G.name}'")
        check_positive_definite(matrices, nodes, what=f"Metric '{G.name}'")
    except NotPositiveDefiniteError as e:
        logger.warning(f"Gauss sweep of '{G.name}': {str(e)}")
        return GaussReport(**report, verdict="NOT_RIEMANNIAN_ON_DOMAIN", pd_failure_at=e.point, detail=str(e))

    # row j holds G(w)(w, e_j) - G(0)(w, e_j)
    residuals = np.einsum("nij,ni->nj", matrices, nodes) - nodes @ g0
    flat_index = int(np.argmax(np.abs(residuals)))
    node, axis = np.unravel_index(flat_index, residuals.shape)
    max_residual = float(np.abs(residuals[node, axis]))
    verdict = "PASS" if max_residual < tol else "FAIL"
    logger.info(f"Gauss sweep of '{G.name}' on {domain.describe()}: max residual {max_residual:.3e} -> {verdict}")
    return GaussReport(
        **report,
        max_residual=max_residual,
        argmax_w=nodes[node].tolist(),
        argmax_z=np.eye(G.dim)[axis].tolist(),
        verdict=verdict,
    )


# ============================================================================
# RADIAL DISTANCE
# ============================================================================

def radial_distance(G: VectorMetric, v: np.ndarray) -> np.ndarray:
    """
    sqrt(G(v)(v, v)).

    Raises:
        NotPositiveDefiniteError: If the radicand is negative
    """
    v = np.asarray(v, dtype=float)
    squared = quadratic_form(metric_at(G, v, check=False), v, v)
    if np.any(squared < 0.0):
        raise NotPositiveDefiniteError(f"Negative radicand in the radial distance of '{G.name}'")
    return np.sqrt(squared)


def radial_gradient(G: VectorMetric, v: np.ndarray, fd_step: Optional[float] = None) -> np.ndarray:
    """
    Gradient of the radial distance: solves G(v) x = d r(v).

    Under the Gauss condition the result is v / ||v||_G(0) with G(v)-norm 1.

    Raises:
        ConfigError: If v = 0
        SingularMatrixError: If G(v) is singular
    """
    v = np.asarray(v, dtype=float)
    if np.any(~np.any(v != 0.0, axis=-1)):
        raise ConfigError("The radial gradient is undefined at v = 0")
    if G.analytic:
        step, order = fd_step or settings.nested_fd_step, 2
    else:
        step, order = fd_step or INTEGRATED_JACOBIAN_STEP, 4
    differential = central_partials(lambda x: radial_distance(G, x), v, step, order=order)
    return solve(metric_at(G, v), differential, what=f"metric '{G.name}'")


def gradient_flow_residual(
    G: VectorMetric, v0: np.ndarray, length: float, steps: int = 100, fd_step: float = 1e-4
) -> float:
    """
    Integrate x' = grad r(x) from v0 and return the largest geodesic-equation residual
    ||DX.X + Gamma(X, X)||_inf along the integral curve.
    """

    def field(x):
        return radial_gradient(G, x)

    _, xs = rk4_first_order(field, np.asarray(v0, dtype=float), length, steps)
    velocity = field(xs)
    acceleration = directional_derivative(field, xs, velocity, fd_step)
    residual = acceleration + geodesic_spray(christoffel_at(G, xs), velocity)
    return float(np.max(np.abs(residual)))
