"""Unconstrained quasi-Newton minimization with analytic gradients."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from simplexreg.errors import DomainError, OptimizationError

__all__ = ["OptimizerProblem", "OptimizeResult", "minimize", "check_gradient"]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class OptimizerProblem:
    """Objective, gradient and stopping rule for :func:`minimize`."""

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    initial_point: np.ndarray
    gradient_norm_tol: float = 1e-8
    max_iterations: int = 500


@dataclass(frozen=True)
class OptimizeResult:
    solution: np.ndarray
    value: float
    gradient: np.ndarray
    converged: bool
    iterations: int
    message: str

    @property
    def gradient_norm(self):
        return float(np.linalg.norm(self.gradient))


def _backtrack(f, x, fx, gx, direction, max_halvings=60, c1=1e-4):
    """Armijo backtracking. Returns ``(step, f_new)`` or ``(None, None)``."""
    slope = float(gx @ direction)
    slack = 10.0 * _EPS * abs(fx)
    t = 1.0
    finite_seen = False
    for _ in range(max_halvings):
        trial = x + t * direction
        ft = f(trial)
        if np.isfinite(ft):
            finite_seen = True
            if ft <= fx + c1 * t * slope + slack:
                return t, float(ft)
        t *= 0.5
    return None, finite_seen


def minimize(problem):
    """Minimize ``problem.objective`` with BFGS and a backtracking line search.

    The inverse-Hessian approximation starts from a scaled identity and
    is updated only when the curvature condition ``y's > 0`` holds. A
    failed line search resets the approximation once before giving up.

    Parameters
    ----------
    problem : OptimizerProblem

    Returns
    -------
    OptimizeResult
        ``converged`` is True only when the gradient norm reached
        ``problem.gradient_norm_tol``.

    Raises
    ------
    DomainError
        If the objective or gradient is not finite at the initial point.
    OptimizationError
        If every trial point along a search direction has a non-finite
        objective. ``last_point`` holds the last valid iterate.
    """
    f, grad = problem.objective, problem.gradient
    x = np.array(problem.initial_point, dtype=float).ravel()
    fx = float(f(x))
    gx = np.asarray(grad(x), dtype=float).ravel()
    if gx.shape != x.shape:
        raise DomainError(
            f"gradient has {gx.size} entries for {x.size} parameters")
    if not np.isfinite(fx) or not np.all(np.isfinite(gx)):
        raise DomainError("objective or gradient not finite at initial point")

    n = x.size
    tol = problem.gradient_norm_tol
    H = None
    iterations = 0
    message = "iteration limit reached"
    reset_used = False

    while True:
        gnorm = np.linalg.norm(gx)
        if gnorm <= tol:
            message = "gradient norm below tolerance"
            break
        if iterations >= problem.max_iterations:
            break

        if H is None:
            direction = -gx / max(gnorm, 1.0)
        else:
            direction = -H @ gx
            if gx @ direction >= 0:
                H = None
                direction = -gx / max(gnorm, 1.0)

        step, f_new = _backtrack(f, x, fx, gx, direction)
        if step is None:
            if not f_new:
                raise OptimizationError(
                    "objective not finite anywhere along the search direction",
                    last_point=x.copy())
            if H is not None and not reset_used:
                H = None
                reset_used = True
                continue
            message = "line search could not reduce the objective"
            break

        x_new = x + step * direction
        g_new = np.asarray(grad(x_new), dtype=float).ravel()
        s = x_new - x
        y = g_new - gx
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if H is None:
                H = np.eye(n) * (sy / float(y @ y))
            rho = 1.0 / sy
            Hy = H @ y
            H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                 + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s))
        x, fx, gx = x_new, f_new, g_new
        iterations += 1
        reset_used = False

    converged = bool(np.linalg.norm(gx) <= tol)
    return OptimizeResult(solution=x, value=fx, gradient=gx,
                          converged=converged, iterations=iterations,
                          message=message)


def check_gradient(objective, gradient, point, h=1e-6):
    """Compare an analytic gradient with central finite differences.

    Returns the largest relative discrepancy over coordinates, using
    ``max(|numeric|, |analytic|, 1)`` as the scale.
    """
    point = np.asarray(point, dtype=float).ravel()
    analytic = np.asarray(gradient(point), dtype=float).ravel()
    numeric = np.empty_like(point)
    for j in range(point.size):
        e = np.zeros_like(point)
        e[j] = h * max(1.0, abs(point[j]))
        numeric[j] = (objective(point + e) - objective(point - e)) / (2 * e[j])
    scale = np.maximum(np.maximum(np.abs(numeric), np.abs(analytic)), 1.0)
    return float(np.max(np.abs(numeric - analytic) / scale))
