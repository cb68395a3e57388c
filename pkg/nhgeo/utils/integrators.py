"""
Fixed-step classical Runge-Kutta integrators over batched states
"""

from typing import Callable, Optional, Tuple

import numpy as np

from nhgeo.core.errors import BlowUpError


Acceleration = Callable[[np.ndarray, np.ndarray], np.ndarray]


def rk4_second_order(
    accel: Acceleration,
    q0: np.ndarray,
    v0: np.ndarray,
    T: float,
    steps: int,
    record: bool = True,
    post_step: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Integrate q'' = accel(q, q') with classical RK4 on the first-order system (q, v).

    Args:
        accel: Batched acceleration, (..., n) x (..., n) -> (..., n)
        q0: Initial positions (..., n)
        v0: Initial velocities (..., n)
        T: Final time (may be zero)
        steps: Number of equal steps (>= 1)
        record: Keep every sample when True, only the final state otherwise
        post_step: Optional map v <- post_step(q, v) applied after each step

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: times (steps+1,), and positions and
        velocities of shape (steps+1, ..., n) when recording, else (..., n)

    Raises:
        BlowUpError: If the state becomes non-finite
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    h = float(T) / steps
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    times = np.linspace(0.0, float(T), steps + 1)

    if record:
        qs = np.empty((steps + 1,) + q.shape)
        vs = np.empty((steps + 1,) + v.shape)
        qs[0], vs[0] = q, v

    for i in range(steps):
        k1q = v
        k1v = accel(q, v)
        k2q = v + 0.5 * h * k1v
        k2v = accel(q + 0.5 * h * k1q, k2q)
        k3q = v + 0.5 * h * k2v
        k3v = accel(q + 0.5 * h * k2q, k3q)
        k4q = v + h * k3v
        k4v = accel(q + h * k3q, k4q)
        q = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if post_step is not None:
            v = post_step(q, v)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise BlowUpError(f"Non-finite state at step {i + 1} of {steps} (t = {times[i + 1]:.6g})")
        if record:
            qs[i + 1], vs[i + 1] = q, v

    if record:
        return times, qs, vs
    return times, q, v


def rk4_first_order(
    field: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    T: float,
    steps: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate x' = field(x) with classical RK4, returning times and all samples."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    h = float(T) / steps
    x = np.array(x0, dtype=float)
    xs = np.empty((steps + 1,) + x.shape)
    xs[0] = x
    for i in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"Non-finite state at step {i + 1} of {steps}")
        xs[i + 1] = x
    return np.linspace(0.0, float(T), steps + 1), xs
