"""
Numerical helpers shared by the services
"""

from .integrators import rk4_first_order, rk4_second_order
from .linalg import check_positive_definite, quadratic_form, solve, symmetrize
from .newton import damped_newton
from .numdiff import central_jacobian, central_partials

__all__ = [
    "rk4_first_order",
    "rk4_second_order",
    "check_positive_definite",
    "quadratic_form",
    "solve",
    "symmetrize",
    "damped_newton",
    "central_jacobian",
    "central_partials",
]
