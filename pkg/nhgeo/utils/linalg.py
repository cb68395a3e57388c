"""
Batched linear-algebra helpers that translate numpy failures into package errors
"""

import numpy as np

from nhgeo.core.errors import NonFiniteError, NotPositiveDefiniteError, SingularMatrixError


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Symmetric part of a batch of square matrices."""
    matrix = np.asarray(matrix, dtype=float)
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))


def ensure_finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} has non-finite entries")
    return values


def solve(matrix: np.ndarray, rhs: np.ndarray, what: str = "matrix") -> np.ndarray:
    """
    Solve a batch of linear systems matrix @ x = rhs for vector right-hand sides.

    Args:
        matrix: Shape (..., n, n)
        rhs: Shape (..., n)
        what: Name used in error messages

    Returns:
        np.ndarray: Solutions of shape (..., n)

    Raises:
        SingularMatrixError: If any matrix in the batch is singular
    """
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    try:
        return np.linalg.solve(matrix, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Singular {what}: {str(e)}")


def solve_matrix(matrix: np.ndarray, rhs: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve matrix @ X = rhs for matrix right-hand sides (..., n, p)."""
    try:
        return np.linalg.solve(np.asarray(matrix, dtype=float), np.asarray(rhs, dtype=float))
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Singular {what}: {str(e)}")


def inverse(matrix: np.ndarray, what: str = "matrix") -> np.ndarray:
    try:
        return np.linalg.inv(np.asarray(matrix, dtype=float))
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Singular {what}: {str(e)}")


def check_positive_definite(matrix: np.ndarray, points: np.ndarray, what: str = "metric") -> None:
    """
    Raise NotPositiveDefiniteError naming the first batch point whose matrix is not PD.

    Args:
        matrix: Symmetric matrices of shape (..., n, n)
        points: Points of shape (..., d) the matrices were evaluated at
        what: Name used in error messages
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        np.linalg.cholesky(matrix)
        return
    except np.linalg.LinAlgError:
        pass
    eigenvalues = np.linalg.eigvalsh(matrix)
    smallest = eigenvalues[..., 0]
    bad = np.argwhere(smallest <= 0.0)
    if bad.size == 0:
        # cholesky and eigvalsh can disagree at the roundoff level
        return
    index = tuple(bad[0])
    points = np.asarray(points, dtype=float)
    point = points[index] if points.ndim > 1 else points
    raise NotPositiveDefiniteError(
        f"{what} is not positive-definite at {np.round(point, 12).tolist()} "
        f"(smallest eigenvalue {float(smallest[index]):.3e})",
        point=point,
    )


def quadratic_form(matrix: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """matrix(a, b) over a batch."""
    return np.einsum("...ij,...i,...j->...", matrix, a, b)
