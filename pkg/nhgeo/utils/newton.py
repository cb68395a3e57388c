"""
Batched damped Newton iteration for square systems F(w) = 0
"""

import logging
from typing import Callable, NamedTuple

import numpy as np

from nhgeo.utils.linalg import solve

logger = logging.getLogger(__name__)

# Both callables receive the candidate unknowns (B, k) together with the
# indices (B,) of the batch members they belong to.
ResidualFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NewtonOutcome(NamedTuple):
    w: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: bool


def damped_newton(
    residual_fn: ResidualFn,
    jacobian_fn: JacobianFn,
    w0: np.ndarray,
    tol: float,
    max_iter: int,
    max_halvings: int = 30,
    what: str = "Newton",
) -> NewtonOutcome:
    """
    Solve residual_fn(w) = 0 for a batch of unknowns with step halving.

    A Newton step is accepted for a batch member once it lowers that
    member's residual infinity-norm; members already below tol are left
    untouched, and members whose residual cannot be lowered any further
    are frozen.

    Args:
        residual_fn: Map (B, k), rows -> (B, k)
        jacobian_fn: Map (B, k), rows -> (B, k, k)
        w0: Initial guesses (..., k)
        tol: Convergence threshold on the residual infinity-norm
        max_iter: Maximum number of Newton iterations
        max_halvings: Maximum number of step halvings per iteration
        what: Label used in log messages

    Returns:
        NewtonOutcome: Solutions and residuals (batch shape of w0), iterations, convergence flag

    Raises:
        SingularMatrixError: If a Jacobian is singular
    """
    w0 = np.asarray(w0, dtype=float)
    shape = w0.shape
    w = w0.reshape(-1, shape[-1]).copy()
    everyone = np.arange(w.shape[0])
    r = np.array(residual_fn(w, everyone), dtype=float).reshape(w.shape)
    norm = np.max(np.abs(r), axis=-1)
    stalled = np.zeros(norm.shape, dtype=bool)

    iterations = 0
    for iterations in range(1, max_iter + 1):
        idx = np.flatnonzero((norm >= tol) & ~stalled)
        if idx.size == 0:
            iterations -= 1
            break
        delta = solve(jacobian_fn(w[idx], idx), -r[idx], what=f"{what} Jacobian")
        alpha = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(max_halvings):
            rows = idx[pending]
            trial = w[rows] + alpha[pending, None] * delta[pending]
            trial_r = np.asarray(residual_fn(trial, rows), dtype=float)
            trial_norm = np.max(np.abs(trial_r), axis=-1)
            better = trial_norm < norm[rows]
            w[rows[better]] = trial[better]
            r[rows[better]] = trial_r[better]
            norm[rows[better]] = trial_norm[better]
            still = np.flatnonzero(pending)[~better]
            pending[:] = False
            pending[still] = True
            if not np.any(pending):
                break
            alpha[pending] *= 0.5
        # members whose residual cannot decrease sit at the roundoff floor or have stalled
        stalled[idx[pending]] = True
        logger.debug(f"{what} iteration {iterations}: max residual {float(np.max(norm)):.3e}")

    converged = bool(np.all(norm < tol))
    return NewtonOutcome(w.reshape(shape), r.reshape(shape), iterations, converged)
