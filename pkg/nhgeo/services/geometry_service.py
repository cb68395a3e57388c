"""
Coordinate-chart calculus: metric fields, Christoffel symbols, constraint
distributions and the g-orthogonal projectors onto D and its complement.

Every operation accepts a single point (n,) or a batch (..., n).
"""

import logging
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from nhgeo.core.config import settings
from nhgeo.core.errors import SingularMatrixError
from nhgeo.models.geometry import (
    ChartPoint,
    ConstraintField,
    MetricField,
    NonholonomicSystem,
    SignaturePolicy,
)
from nhgeo.utils.linalg import (
    check_positive_definite,
    ensure_finite,
    inverse,
    quadratic_form,
    solve_matrix,
    symmetrize,
)
from nhgeo.utils.numdiff import central_partials, directional_derivative

logger = logging.getLogger(__name__)

PointLike = Union[ChartPoint, np.ndarray, list, tuple]
VectorField = Callable[[np.ndarray], np.ndarray]


def as_points(q: PointLike) -> np.ndarray:
    if isinstance(q, ChartPoint):
        return q.coords
    return np.asarray(q, dtype=float)


def evaluate_field(fn: Callable, q: np.ndarray, vectorized: bool) -> np.ndarray:
    """Call a field evaluator on a batch, looping when it only accepts single points."""
    q = np.asarray(q, dtype=float)
    if vectorized or q.ndim == 1:
        return np.asarray(fn(q), dtype=float)
    flat = q.reshape(-1, q.shape[-1])
    values = np.stack([np.asarray(fn(point), dtype=float) for point in flat])
    return values.reshape(q.shape[:-1] + values.shape[1:])


# ============================================================================
# METRICS
# ============================================================================

def metric_at(g: MetricField, q: PointLike, check: bool = True) -> np.ndarray:
    """
    Evaluate a metric field.

    Args:
        g: Metric field
        q: Point(s) of shape (..., n)
        check: Apply the positive-definiteness check required by the signature policy

    Returns:
        np.ndarray: Symmetrized matrices of shape (..., n, n)

    Raises:
        NonFiniteError: If an entry is NaN or infinite
        NotPositiveDefiniteError: If the policy requires PD and a matrix is not
    """
    q = as_points(q)
    matrix = ensure_finite(symmetrize(evaluate_field(g.evaluate, q, g.vectorized)), f"Metric '{g.name}'")
    if check and g.signature_policy == SignaturePolicy.REQUIRE_POSITIVE_DEFINITE:
        check_positive_definite(matrix, q, what=f"Metric '{g.name}'")
    return matrix


def metric_partials_at(
    g: MetricField, q: PointLike, fd_step: Optional[float] = None, order: Optional[int] = None
) -> np.ndarray:
    """Partials of g, shape (..., n, n, n) with [..., l, i, j] = d_l g_ij."""
    q = as_points(q)
    if g.partials is not None:
        return ensure_finite(symmetrize(evaluate_field(g.partials, q, g.vectorized)), f"Partials of '{g.name}'")
    step = fd_step or g.fd_step or settings.metric_fd_step
    return central_partials(lambda x: metric_at(g, x, check=False), q, step, order=order or g.fd_order)


def christoffel_at(
    g: MetricField, q: PointLike, fd_step: Optional[float] = None, order: Optional[int] = None
) -> np.ndarray:
    """
    Christoffel symbols of the Levi-Civita connection.

    Args:
        g: Metric field (invertible at q; positive-definite if its policy says so)
        q: Point(s) of shape (..., n)
        fd_step: Step for finite-difference partials when g has no analytic partials
        order: Stencil order for those partials

    Returns:
        np.ndarray: Shape (..., n, n, n) with [..., k, i, j] = Gamma^k_ij

    Raises:
        SingularMatrixError: If the metric matrix is singular
    """
    q = as_points(q)
    ginv = inverse(metric_at(g, q), what=f"metric '{g.name}'")
    dg = metric_partials_at(g, q, fd_step=fd_step, order=order)
    lowered = (
        np.einsum("...ijl->...lij", dg)
        + np.einsum("...jil->...lij", dg)
        - dg
    )
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", ginv, lowered)
    return 0.5 * (gamma + np.swapaxes(gamma, -1, -2))


def geodesic_spray(gamma: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Gamma(v, v) with upper index free, shape (..., n)."""
    return np.einsum("...kij,...i,...j->...k", gamma, v, v)


def covariant_derivative(
    g: MetricField, X: VectorField, Y: VectorField, q: PointLike, fd_step: Optional[float] = None
) -> np.ndarray:
    """Levi-Civita derivative of the field Y along X at q: DY.X + Gamma(X, Y)."""
    q = as_points(q)
    step = fd_step or settings.nested_fd_step
    x_val = np.asarray(X(q), dtype=float)
    y_val = np.asarray(Y(q), dtype=float)
    dy = directional_derivative(Y, q, x_val, step)
    gamma = christoffel_at(g, q)
    return dy + np.einsum("...kij,...i,...j->...k", gamma, x_val, y_val)


# ============================================================================
# CONSTRAINTS AND PROJECTORS
# ============================================================================

def constraint_at(A: ConstraintField, q: PointLike, check: bool = True) -> np.ndarray:
    """
    Evaluate the constraint one-forms.

    Raises:
        SingularMatrixError: If check is on and A(q) is not of full row rank
    """
    q = as_points(q)
    matrix = ensure_finite(evaluate_field(A.evaluate, q, A.vectorized), f"Constraint '{A.name}'")
    if check and A.corank > 0:
        ranks = np.linalg.matrix_rank(matrix)
        if np.any(ranks < A.corank):
            raise SingularMatrixError(f"Constraint '{A.name}' is rank deficient at a queried point")
    return matrix


def constraint_partials_at(A: ConstraintField, q: PointLike, fd_step: Optional[float] = None) -> np.ndarray:
    """Partials of A, shape (..., n, m, n) with [..., i, :, :] = d_i A."""
    q = as_points(q)
    if A.partials is not None:
        return ensure_finite(evaluate_field(A.partials, q, A.vectorized), f"Partials of '{A.name}'")
    step = fd_step or settings.metric_fd_step
    return central_partials(lambda x: constraint_at(A, x, check=False), q, step)


def _multiplier_operator(g: MetricField, A: ConstraintField, q: np.ndarray):
    """g^-1 A^T and A g^-1 A^T at q."""
    ginv = inverse(metric_at(g, q), what=f"metric '{g.name}'")
    a = constraint_at(A, q)
    ginv_at = ginv @ np.swapaxes(a, -1, -2)
    return a, ginv_at, a @ ginv_at


def orthogonal_projector_at(g: MetricField, A: ConstraintField, q: PointLike) -> np.ndarray:
    """
    g-orthogonal projector onto D_q = ker A(q).

    Returns:
        np.ndarray: P = Id - g^-1 A^T (A g^-1 A^T)^-1 A, shape (..., n, n)

    Raises:
        SingularMatrixError: If A g^-1 A^T is singular
    """
    q = as_points(q)
    a, ginv_at, gram = _multiplier_operator(g, A, q)
    correction = ginv_at @ solve_matrix(gram, a, what="constraint Gram matrix A g^-1 A^T")
    return np.eye(g.dim) - correction


def complement_projector_at(g: MetricField, A: ConstraintField, q: PointLike) -> np.ndarray:
    """Projector P' = Id - P onto the g-orthogonal complement of D_q."""
    return np.eye(g.dim) - orthogonal_projector_at(g, A, q)


def distribution_basis(g: MetricField, A: ConstraintField, q: PointLike) -> np.ndarray:
    """
    g-orthonormal basis of D_q as the columns of an n x k matrix.

    The null space of A(q) comes from a column-pivoted QR factorization of
    A(q)^T and is then orthonormalized with respect to g(q) through a
    Cholesky factor of its Gram matrix, so the result is deterministic.
    """
    q = as_points(q)
    if q.ndim != 1:
        raise ValueError("distribution_basis works on a single point")
    a = constraint_at(A, q)
    m = A.corank
    if m == 0:
        null = np.eye(g.dim)
    else:
        Q, _, _ = scipy.linalg.qr(a.T, pivoting=True)
        null = Q[:, m:]
    gram = null.T @ metric_at(g, q) @ null
    try:
        chol = np.linalg.cholesky(symmetrize(gram))
    except np.linalg.LinAlgError:
        raise SingularMatrixError("Metric restricted to the distribution is not positive-definite")
    basis = scipy.linalg.solve_triangular(chol, null.T, lower=True).T
    # sign convention: largest-magnitude entry of each column positive
    signs = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(basis.shape[1])])
    return basis * np.where(signs == 0, 1.0, signs)


# ============================================================================
# NONHOLONOMIC CONNECTION
# ============================================================================

def nh_covariant_derivative(
    sys: NonholonomicSystem, X: VectorField, Y: VectorField, q: PointLike, fd_step: Optional[float] = None
) -> np.ndarray:
    """
    Nonholonomic connection P(nabla_X Y) + nabla_X (P' Y) at q.

    Args:
        sys: Nonholonomic system
        X: Batched vector field (..., n) -> (..., n)
        Y: Batched vector field (..., n) -> (..., n)
        q: Point(s) of shape (..., n)
        fd_step: Step for the directional derivatives

    Returns:
        np.ndarray: Components of shape (..., n)
    """
    q = as_points(q)
    step = fd_step or settings.nested_fd_step

    def y_normal(x):
        return np.einsum("...ij,...j->...i", complement_projector_at(sys.g, sys.A, x), Y(x))

    tangential = np.einsum(
        "...ij,...j->...i",
        orthogonal_projector_at(sys.g, sys.A, q),
        covariant_derivative(sys.g, X, Y, q, step),
    )
    return tangential + covariant_derivative(sys.g, X, y_normal, q, step)


def compatibility_residual(
    sys: NonholonomicSystem,
    X: VectorField,
    Y: VectorField,
    Z: VectorField,
    q: PointLike,
    fd_step: Optional[float] = None,
) -> np.ndarray:
    """X(g(Y, Z)) - g(nabla^nh_X Y, Z) - g(Y, nabla^nh_X Z); vanishes for sections Y, Z of D."""
    q = as_points(q)
    step = fd_step or settings.nested_fd_step

    def inner(x):
        return quadratic_form(metric_at(sys.g, x, check=False), Y(x), Z(x))

    lhs = directional_derivative(inner, q, np.asarray(X(q), dtype=float), step)
    gq = metric_at(sys.g, q)
    rhs = quadratic_form(gq, nh_covariant_derivative(sys, X, Y, q, step), Z(q)) + quadratic_form(
        gq, Y(q), nh_covariant_derivative(sys, X, Z, q, step)
    )
    return lhs - rhs
