"""
Central finite differences over batched evaluators.

Evaluators take arrays of shape (..., n) and return (..., *S); every
stencil is evaluated in one call so integrations behind the evaluator run
as a single batch.
"""

from typing import Callable, Optional

import numpy as np

# offset (in units of the step) and weight of each stencil point
_STENCILS = {
    2: (np.array([1.0, -1.0]), np.array([0.5, -0.5])),
    4: (np.array([2.0, 1.0, -1.0, -2.0]), np.array([-1.0, 8.0, -8.0, 1.0]) / 12.0),
}


def _stencil(order: int):
    try:
        return _STENCILS[order]
    except KeyError:
        raise ValueError(f"Unsupported finite-difference order {order}; use 2 or 4")


def stencil_points(x: np.ndarray, step: float, order: int = 2) -> np.ndarray:
    """
    All points a central stencil visits around x.

    Args:
        x: Points of shape (..., n)
        step: Finite-difference step
        order: Accuracy order of the stencil (2 or 4)

    Returns:
        np.ndarray: Shape (..., p, n, n); [..., s, i, :] is x shifted along axis i by offset s
    """
    x = np.asarray(x, dtype=float)
    offsets, _ = _stencil(order)
    n = x.shape[-1]
    shifts = offsets[:, None, None] * step * np.eye(n)[None, :, :]
    return x[..., None, None, :] + shifts


def central_partials(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    step: float,
    order: int = 2,
    check: Optional[Callable[[np.ndarray], None]] = None,
) -> np.ndarray:
    """
    Partial derivatives of a batched function along every coordinate.

    Args:
        fn: Function mapping (..., n) to (..., *S)
        x: Points of shape (..., n)
        step: Finite-difference step
        order: 2 or 4
        check: Optional callback validating the stencil points before evaluation

    Returns:
        np.ndarray: Shape (..., n, *S) with [..., i, ...] = d fn / d x_i
    """
    x = np.asarray(x, dtype=float)
    _, weights = _stencil(order)
    points = stencil_points(x, step, order)
    if check is not None:
        check(points)
    values = np.asarray(fn(points), dtype=float)
    lead = x.ndim - 1
    return np.tensordot(weights, values, axes=([0], [lead])) / step


def central_jacobian(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    step: float,
    order: int = 2,
    check: Optional[Callable[[np.ndarray], None]] = None,
) -> np.ndarray:
    """Jacobian (..., m, n) of a batched vector function (..., n) -> (..., m)."""
    partials = central_partials(fn, x, step, order=order, check=check)
    return np.swapaxes(partials, -1, -2)


def directional_derivative(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    direction: np.ndarray,
    step: float,
) -> np.ndarray:
    """Second-order central derivative of fn at x along direction."""
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    points = np.stack([x + step * direction, x - step * direction])
    values = np.asarray(fn(points), dtype=float)
    return (values[0] - values[1]) / (2.0 * step)
