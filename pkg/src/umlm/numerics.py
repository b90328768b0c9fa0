"""Damped Newton iteration and central-difference Jacobians for small dense systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NoConvergence, SingularJacobian

VectorFn = Callable[[np.ndarray], np.ndarray]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class NewtonSettings:
    tolerance: float = 1e-10
    max_iterations: int = 50
    damping_floor: float = 2.0**-20

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.damping_floor <= 1:
            raise ValueError("damping_floor must lie in (0, 1]")


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool


def fd_jacobian(f: VectorFn, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian ``J[i, j] = (f_i(x + h e_j) - f_i(x - h e_j)) / 2h``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        fp = np.atleast_1d(np.asarray(f(x + step), dtype=float))
        fm = np.atleast_1d(np.asarray(f(x - step), dtype=float))
        cols.append((fp - fm) / (2.0 * h))
    return np.column_stack(cols)


def check_conditioning(J: np.ndarray, what: str = "Jacobian") -> None:
    if not np.all(np.isfinite(J)):
        raise SingularJacobian(f"{what} has non-finite entries")
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularJacobian(f"{what} condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}")


def solve_newton(
    residual: VectorFn,
    x0,
    settings: Optional[NewtonSettings] = None,
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    h: float = 1e-6,
) -> SolveReport:
    """Solve ``residual(x) = 0`` for square systems by damped Newton steps.

    Without an analytic ``jacobian`` a central-difference one with step ``h``
    is used. Each full step is halved until the residual norm decreases; if
    the step scale drops below ``settings.damping_floor`` the iteration gives
    up with :class:`NoConvergence`. Exhausting ``max_iterations`` returns a
    report with ``converged=False`` instead of raising.
    """
    settings = settings or NewtonSettings()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    r = np.atleast_1d(np.asarray(residual(x), dtype=float))
    if r.shape != x.shape:
        raise ValueError(f"residual maps {x.size} unknowns to {r.size} equations")
    norm = float(np.linalg.norm(r))

    for it in range(settings.max_iterations):
        if norm <= settings.tolerance:
            return SolveReport(x, norm, it, True)
        J = jacobian(x) if jacobian is not None else fd_jacobian(residual, x, h)
        J = np.atleast_2d(np.asarray(J, dtype=float))
        check_conditioning(J)
        dx = np.linalg.solve(J, -r)

        scale = 1.0
        while True:
            x_new = x + scale * dx
            r_new = np.atleast_1d(np.asarray(residual(x_new), dtype=float))
            norm_new = float(np.linalg.norm(r_new))
            if norm_new < norm:
                break
            scale *= 0.5
            if scale < settings.damping_floor:
                raise NoConvergence(
                    f"no descent direction after damping (residual {norm:.3e}, iteration {it})"
                )
        x, r, norm = x_new, r_new, norm_new

    return SolveReport(x, norm, settings.max_iterations, norm <= settings.tolerance)
