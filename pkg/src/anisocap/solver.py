"""Discrete condenser minimisation along a regularisation path.

Each stage minimises, over the values at interior nodes,

    h^N Σ_cells [ (F_ε^p)_λ(D⁺u) + μ |D⁺u|^p ]

by accelerated gradient descent.  The Moreau envelope makes every stage
objective differentiable; λ, μ and (for norms that are not strictly convex)
ε are halved from sweep to sweep, each stage warm-started from the last.
Within a sweep λ is lowered first and μ second.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from .anisotropy import Regularized, envelope_and_gradient
from .errors import ConvergenceError
from .grid import (Grid, ScalarField, VectorField, backward_div, build_grid, energy,
                   forward_diff, weak_div_residual)
from .optim import accelerated_descent
from .wulff import barrier_v, radius_bounds

__all__ = ["Schedule", "SolveResult", "solve_annulus", "solve_dirichlet", "extract_dual",
           "certify", "residuals"]


@dataclass(frozen=True)
class Schedule:
    """Regularisation path and stopping rules.

    Stage ``k`` uses ``λ_k = max(λ₀ 2^{-k}, λ_floor)`` and likewise for
    ``μ`` and ``ε``.  Intermediate stages stop at ``10 * tol``.
    """

    lam0: float = 0.1
    mu0: float = 0.1
    eps0: float = 0.1
    stages: int = 8
    lam_floor: float = 1e-4
    mu_floor: float = 0.0
    eps_floor: float = 0.0
    tol: float = 1e-5
    max_iter: int = 20_000
    face_tol: float = 1e-2
    precondition: bool = True

    def __post_init__(self):
        for name in ("lam0", "mu0", "eps0", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.stages < 1:
            raise ValueError("stages must be at least 1")
        if self.mu0 < 0 or self.mu_floor < 0 or self.eps_floor < 0 or self.lam_floor <= 0:
            raise ValueError("floors must be non-negative (lam_floor positive)")

    def lam(self, k):
        return max(self.lam0 * 0.5 ** k, self.lam_floor)

    def mu(self, k):
        return max(self.mu0 * 0.5 ** k, self.mu_floor)

    def eps(self, k):
        return max(self.eps0 * 0.5 ** k, self.eps_floor)

    def substages(self, strictly_convex):
        """``(λ, μ, ε, final)`` for every sub-stage, λ lowered before μ."""
        out = []
        for k in range(self.stages):
            eps = 0.0 if strictly_convex else self.eps(k)
            mu_prev = self.mu(max(k - 1, 0))
            if k > 0:
                out.append((self.lam(k), mu_prev, eps, False))
            out.append((self.lam(k), self.mu(k), eps, k == self.stages - 1))
        return out


@dataclass
class SolveResult:
    """Minimiser, dual field and certificates of one solve."""

    grid: Grid
    u: ScalarField
    flux: VectorField
    direction: VectorField
    energy: float
    residuals: dict
    iterations: int
    wall_time: float
    converged: bool
    stages: list = field(default_factory=list)
    final: tuple = (math.nan, math.nan, math.nan)

    def summary(self, timing=True):
        return {
            "energy": self.energy,
            "residual_dual_feasibility": self.residuals["dual_feasibility"],
            "residual_alignment": self.residuals["alignment"],
            "residual_weak_div": self.residuals["weak_div"],
            "iterations": self.iterations,
            "wall_time_s": self.wall_time if timing else 0.0,
        }


class _StageObjective:
    """Smoothed energy as a function of the interior values."""

    def __init__(self, grid, base, aniso, p, lam, mu):
        self.grid = grid
        self.base = base
        self.mask = grid.interior
        self.aniso = aniso
        self.p = p
        self.lam = lam
        self.mu = mu
        self.scale = grid.h ** grid.dim
        self.last = None

    def field(self, x):
        u = self.base.copy()
        u[self.mask] = x
        return u

    def __call__(self, x):
        u = self.field(x)
        D = forward_diff(u, self.grid.h)
        val, W, _ = envelope_and_gradient(self.aniso, self.p, self.lam, D, mu=self.mu)
        f = self.scale * float(np.sum(val))
        g = -self.scale * backward_div(W, self.grid.h)[self.mask]
        return f, g


def laplacian_preconditioner(grid):
    """Exact solver for the Dirichlet Laplacian on the interior nodes.

    The matrix is the Hessian of ``(h^N/2) Σ |D⁺u|²`` up to the factor
    ``h^{N-2}``; the stage objectives are measured in this metric.
    """
    mask = grid.interior
    idx = np.full(grid.shape, -1, dtype=np.int64)
    n = int(mask.sum())
    idx[mask] = np.arange(n)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 2.0 * grid.dim)]
    for k in range(grid.dim):
        for shift in (1, -1):
            nb = np.roll(idx, -shift, axis=k)
            ok = mask & (nb >= 0)
            rows.append(idx[ok])
            cols.append(nb[ok])
            vals.append(-np.ones(int(ok.sum())))
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)) * grid.h ** (grid.dim - 2)
    return spl.factorized(A)


def _stage_aniso(aniso, eps):
    return Regularized(aniso, eps) if eps > 0 else aniso


def _interp_from(coarse_grid, coarse_u, fine_grid):
    f = RegularGridInterpolator(coarse_grid.axes, coarse_u, bounds_error=False, fill_value=0.0)
    return f(fine_grid.points().reshape(-1, fine_grid.dim)).reshape(fine_grid.shape)


def _initial_guess(problem, grid, init):
    if isinstance(init, np.ndarray):
        return np.clip(init, 0.0, 1.0)
    if init == "zero":
        return np.zeros(grid.shape)
    if init == "barrier":
        rmid = 0.5 * (grid.r1 + grid.r2)
        v = barrier_v(problem.aniso, problem.p, rmid, problem.R, grid.points())
        return np.clip(np.nan_to_num(v, nan=1.0, posinf=1.0), 0.0, 1.0)
    raise ValueError(f"unknown initial guess {init!r}")


def solve_dirichlet(grid, aniso, p, data, sched=None, init=None, record=False,
                    final_only=False):
    """Minimise the discrete energy with Dirichlet values ``data`` on non-interior nodes.

    Parameters
    ----------
    grid : Grid
    aniso : Anisotropy
    p : float
        Any ``p > 1``.
    data : ndarray
        Values on the grid; only non-interior nodes are used.
    init : ndarray, optional
        Starting field (its interior values are used).
    final_only : bool
        Run only the last sub-stage of the schedule (for starts that are
        already close, such as interpolated coarse solutions).

    Returns
    -------
    SolveResult
    """
    sched = Schedule() if sched is None else sched
    if not p > 1:
        raise ValueError("p must exceed 1")
    t0 = time.perf_counter()
    mask = grid.interior
    base = np.where(mask, 0.0, np.asarray(data, dtype=float))
    x = (np.zeros(int(mask.sum())) if init is None
         else np.asarray(init, dtype=float)[mask].copy())
    h, dim = grid.h, grid.dim
    total_iters = 0
    stages = []
    converged = True
    L = 1.0
    obj = None
    precond = laplacian_preconditioner(grid) if sched.precondition else None
    plan = sched.substages(aniso.strictly_convex)
    if final_only:
        plan = plan[-1:]
    for lam, mu, eps, final in plan:
        a_st = _stage_aniso(aniso, eps)
        obj = _StageObjective(grid, base, a_st, p, lam, mu)
        tol = sched.tol if final else 10 * sched.tol

        def stop(f_new, f_old, g, tol=tol):
            rel = (f_old - f_new) / max(abs(f_new), 1e-300)
            return rel < tol and float(np.linalg.norm(g)) < tol / h

        if precond is None:
            # the Yosida term alone is (8/λ) h^N / h² Lipschitz; start well below
            L0 = max(L, 1e-3 * 4 * dim * h ** (dim - 2) / lam)
        else:
            L0 = L
        res = accelerated_descent(obj, x, L0=L0, max_iter=sched.max_iter, stop=stop,
                                  keep_history=record, precond=precond)
        if not np.all(np.isfinite(res.x)):
            raise ConvergenceError("non-finite iterate", math.nan)
        x, L = res.x, res.L
        total_iters += res.iterations
        stages.append({"lam": lam, "mu": mu, "eps": eps, "iterations": res.iterations,
                       "evaluations": res.evaluations, "objective": res.f,
                       "converged": res.converged, "history": res.history})
        if final and not res.converged:
            converged = False
    u = obj.field(x)
    D = forward_diff(u, h)
    _, genv, eta = envelope_and_gradient(obj.aniso, p, obj.lam, D)
    flux, direction = _dual_from_stage(aniso, p, D, genv, eta, obj.aniso, sched.face_tol)
    res_d = residuals(grid, aniso, u, direction, flux)
    final = plan[-1]
    return SolveResult(grid, ScalarField(grid, u), VectorField(grid, flux),
                       VectorField(grid, direction), energy(grid, u, aniso, p), res_d,
                       total_iters, time.perf_counter() - t0, converged, stages,
                       final[:3])


def solve_annulus(problem, grid_h, sched=None, init="multilevel", grid=None, bounds=None,
                  coarsest=None):
    """Discrete capacitary potential of the condenser ``W_R \\ Ω̄``.

    Parameters
    ----------
    problem : AnnulusProblem
    grid_h : float
        Grid spacing.
    init : {"multilevel", "barrier", "zero"} or ndarray
        ``"multilevel"`` solves on grids of spacing ``2h, 4h, ...`` down to
        the coarsest resolvable one (started from zero) and interpolates.

    Raises
    ------
    ValueError
        If ``p`` is outside ``(1, N)``.
    GeometryError
        If the grid does not resolve the condenser.
    """
    if not 1 < problem.p < problem.dim:
        raise ValueError(f"capacity semantics need 1 < p < N = {problem.dim}")
    sched = Schedule() if sched is None else sched
    bounds = radius_bounds(problem.aniso, problem.domain) if bounds is None else bounds
    grid = build_grid(problem, grid_h, bounds=bounds) if grid is None else grid
    t0 = time.perf_counter()
    final_only = False
    if isinstance(init, str) and init == "multilevel":
        hc = 2 * grid_h
        ok = hc < (problem.R - bounds.r2) / 8 and hc < bounds.r1 / 8
        if coarsest is not None:
            ok = ok and hc <= coarsest * (1 + 1e-12)
        if ok:
            coarse = solve_annulus(problem, hc, sched, "multilevel", bounds=bounds,
                                   coarsest=coarsest)
            start = _interp_from(coarse.grid, coarse.u.values, grid)
            final_only = True
        else:
            start = np.zeros(grid.shape)
    else:
        start = _initial_guess(problem, grid, init)
    data = grid.dirichlet_values()
    result = solve_dirichlet(grid, problem.aniso, problem.p, data, sched, init=start,
                             final_only=final_only)
    result.wall_time = time.perf_counter() - t0
    return result


def _dual_from_stage(aniso, p, D, genv, eta, stage_aniso, face_tol):
    """Direction ``z̃ ∈ ∂F(∇u)`` and flux ``p F^{p-1}(∇u) z̃``.

    The Yosida gradient lies in ``∂(F_ε^p)(J)`` at the resolvent ``J``, so
    dividing by ``p F_ε^{p-1}(J)`` and removing the ``ε J/|J|`` part gives a
    subgradient of ``F`` at ``J``.  It is then projected onto the face
    ``∂F(∇u)`` (enlarged by ``face_tol`` to absorb near-kinks).
    """
    FJ = stage_aniso.value(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(FJ[..., None] > 0, genv / (p * FJ[..., None] ** (p - 1)), 0.0)
    if isinstance(stage_aniso, Regularized) and stage_aniso is not aniso:
        nJ = np.sqrt(np.sum(eta * eta, axis=-1))[..., None]
        d = d - stage_aniso.eps * np.where(nJ > 0, eta / np.where(nJ > 0, nJ, 1.0), 0.0)
    return _flux_from_direction(aniso, p, D, d, face_tol)


def _flux_from_direction(aniso, p, D, d, face_tol):
    h_tiny = 1e-12
    nD = np.sqrt(np.sum(D * D, axis=-1))
    moving = nD > h_tiny
    direction = np.zeros_like(D)
    if moving.any():
        direction[moving] = aniso.face_projection(D[moving], d[moving], tol=face_tol)
    FD = aniso.value(D)
    flux = (p * np.where(moving, FD, 0.0) ** (p - 1))[..., None] * direction
    return flux, direction


def extract_dual(problem, u, a=None, p=None, selection="face", sched=None):
    """Dual direction ``z̃`` and flux for a given discrete potential.

    Parameters
    ----------
    selection : {"face", "minimal"}
        ``"face"`` recomputes the final-stage envelope gradient at ``∇u``
        and projects it onto ``∂F(∇u)``; ``"minimal"`` uses the least-norm
        subgradient, which fails the divergence test for crystalline norms.

    Returns
    -------
    flux, direction : VectorField
    """
    a = problem.aniso if a is None else a
    p = problem.p if p is None else p
    sched = Schedule() if sched is None else sched
    grid = u.grid
    D = forward_diff(u.values, grid.h)
    if selection == "minimal":
        nD = np.sqrt(np.sum(D * D, axis=-1))
        direction = np.where((nD > 1e-12)[..., None], a.minimal_subgradient(D), 0.0)
        flux = (p * a.value(D) ** (p - 1))[..., None] * direction
        return VectorField(grid, flux), VectorField(grid, direction)
    if selection != "face":
        raise ValueError(f"unknown selection {selection!r}")
    lam, _, eps, _ = sched.substages(a.strictly_convex)[-1]
    st = _stage_aniso(a, eps)
    _, genv, eta = envelope_and_gradient(st, p, lam, D)
    flux, direction = _dual_from_stage(a, p, D, genv, eta, st, sched.face_tol)
    return VectorField(grid, flux), VectorField(grid, direction)


def residuals(grid, aniso, u, direction, flux, data=None):
    """Dual feasibility, alignment and weak divergence of a dual pair."""
    u = u.values if isinstance(u, ScalarField) else u
    direction = direction.values if isinstance(direction, VectorField) else direction
    flux = flux.values if isinstance(flux, VectorField) else flux
    D = forward_diff(u, grid.h)
    nD = np.sqrt(np.sum(D * D, axis=-1))
    moving = nD > 1e-12
    FD = aniso.value(D)
    feas = float(np.max(aniso.polar(direction)) - 1.0)
    if moving.any():
        mis = np.abs(np.sum(direction * D, axis=-1) - FD)[moving]
        align = float(np.mean(mis))
        meanF = float(np.mean(FD[moving]))
    else:
        align, meanF = 0.0, 0.0
    return {
        "dual_feasibility": feas,
        "alignment": align,
        "mean_F": meanF,
        "weak_div": weak_div_residual(grid, flux, data),
        "flux_max": float(np.max(np.abs(flux))),
    }


def certify(problem, result, n_directions=20, seed=0):
    """Recompute residuals and probe the energy for remaining descent.

    The energy gap is the largest decrease of the true discrete energy
    found by exact line minimisation along ``n_directions`` seeded smooth
    random directions supported on interior nodes.
    """
    grid = result.grid
    a, p = problem.aniso, problem.p
    u = result.u.values
    out = residuals(grid, a, u, result.direction, result.flux)
    e0 = energy(grid, u, a, p)
    rng = np.random.default_rng(seed)
    pts = grid.points()
    ext = np.array([n * grid.h for n in grid.half_width])
    mask = grid.interior
    gap = 0.0
    for _ in range(n_directions):
        v = np.zeros(grid.shape)
        for _k in range(6):
            freq = rng.integers(1, 6, size=grid.dim)
            phase = rng.uniform(0, 2 * math.pi, size=grid.dim)
            term = np.ones(grid.shape)
            for j in range(grid.dim):
                term = term * np.sin(freq[j] * math.pi * pts[..., j] / ext[j] + phase[j])
            v += rng.normal() * term
        v = np.where(mask, v, 0.0)
        v /= max(float(np.max(np.abs(v))), 1e-300)
        line = minimize_scalar(lambda t: energy(grid, u + t * v, a, p),
                               bounds=(-0.05, 0.05), method="bounded",
                               options={"xatol": 1e-10})
        gap = max(gap, e0 - float(line.fun))
    out["energy"] = e0
    out["energy_gap"] = max(gap, 0.0)
    return out
