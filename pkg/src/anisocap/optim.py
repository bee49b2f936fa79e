"""Accelerated gradient descent with backtracking for smooth convex objectives."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    evaluations: int
    L: float
    converged: bool
    history: list


def accelerated_descent(fun_grad, x0, L0=1.0, max_iter=10_000, stop=None, shrink=0.9,
                        keep_history=False, precond=None):
    """Minimise a smooth convex function by monotone FISTA.

    Parameters
    ----------
    fun_grad : callable
        ``fun_grad(x) -> (f, g)``.
    x0 : ndarray
        Starting point.
    L0 : float
        Initial Lipschitz estimate; doubled on failed sufficient decrease
        and multiplied by ``shrink`` before every step so it can adapt down.
    stop : callable, optional
        ``stop(f_new, f_old, g_new) -> bool`` evaluated after every accepted
        step.  Without it the loop runs ``max_iter`` steps.
    precond : callable, optional
        Applies ``P^{-1}`` for a symmetric positive definite ``P``; steps and
        the sufficient-decrease test then use the ``P`` metric, so ``L`` is
        a Lipschitz estimate relative to ``P``.

    Notes
    -----
    A step that would increase the objective is rejected and the momentum
    is reset (function-value restart), so accepted iterates decrease
    monotonically.  A non-finite objective value is treated as a failed
    sufficient-decrease test.
    """
    x = np.array(x0, dtype=float, copy=True)
    fx, gx = fun_grad(x)
    evals = 1
    y, fy, gy = x, fx, gx
    t = 1.0
    L = float(L0)
    history = [fx] if keep_history else []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        L *= shrink
        step = gy if precond is None else precond(gy)
        gg = float(np.dot(gy, step))
        while True:
            x_new = y - step / L
            f_new, g_new = fun_grad(x_new)
            evals += 1
            if math.isfinite(f_new) and f_new <= fy - 0.5 * gg / L + 1e-15 * abs(fy):
                break
            L *= 2.0
            if L > 1e300:
                return DescentResult(x, fx, gx, it, evals, L, False, history)
        if f_new > fx:
            # restart from the last accepted iterate without momentum
            y, fy, gy, t = x, fx, gx, 1.0
            continue
        f_old = fx
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        x_prev, x, fx, gx = x, x_new, f_new, g_new
        if keep_history:
            history.append(fx)
        if stop is not None and stop(fx, f_old, gx):
            converged = True
            break
        if beta > 0:
            y = x + beta * (x - x_prev)
            fy, gy = fun_grad(y)
            evals += 1
            if not math.isfinite(fy):
                y, fy, gy, beta = x, fx, gx, 0.0
        else:
            y, fy, gy = x, fx, gx
        t = t_new
    return DescentResult(x, fx, gx, it, evals, L, converged, history)
