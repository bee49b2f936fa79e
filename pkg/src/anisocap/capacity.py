"""Relative capacities, monotone sweeps in ``R`` and the exterior limit.

Every sweep entry is an independent solve, so entries run in a thread pool
(``threads`` argument, falling back to ``ANISOCAP_THREADS``).  All entries
share one grid spacing; the grids then nest and the fields can be compared
node by node.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .solver import Schedule, certify, solve_annulus
from .wulff import AnnulusProblem, barrier_v, radius_bounds

__all__ = ["CapacityEntry", "CapacityCurve", "relative_capacity", "capacity_sweep",
           "default_spacing", "fit_exterior_capacity", "check_sandwich", "thread_count",
           "SandwichReport"]

NODE_CAP = 4_000_000


@dataclass
class CapacityEntry:
    R: float
    capacity: float
    energy_gap: float
    wall_time: float
    summary: dict
    converged: bool = True
    result: object = field(default=None, repr=False)


@dataclass
class CapacityCurve:
    """Capacities along increasing ``R`` and their extrapolated limit.

    Attributes
    ----------
    entries : list of CapacityEntry
    extrapolated : float
        Fitted ``Cap_∞`` (``nan`` with fewer than three entries).
    alpha : float
        The exponent ``(p - N)/(p - 1)`` used by the fit.
    h : float
        Common grid spacing.
    monotone_violation : float
        ``max (u_R - u_R')`` over shared interior nodes of consecutive
        entries ``R < R'``; non-positive when the fields increase with ``R``.
    capacity_increase : float
        Largest ``Cap(R') - Cap(R)`` over consecutive entries.
    """

    entries: list
    extrapolated: float
    alpha: float
    h: float
    monotone_violation: float = math.nan
    capacity_increase: float = math.nan
    fit_radius: float = math.nan

    def to_json(self, timing=True):
        return {
            "cap_infinity": self.extrapolated,
            "alpha": self.alpha,
            "h": self.h,
            "monotone_violation": self.monotone_violation,
            "entries": [{"R": e.R, "capacity": e.capacity, "energy_gap": e.energy_gap,
                         "wall_time_s": e.wall_time if timing else 0.0, **{
                             k: v for k, v in e.summary.items() if k != "wall_time_s"}}
                        for e in self.entries],
        }

    def to_csv(self, timing=True):
        lines = ["R,capacity,energy_gap,wall_time_s"]
        for e in self.entries:
            t = e.wall_time if timing else 0.0
            lines.append("%.12g,%.12g,%.12g,%.6g" % (e.R, e.capacity, e.energy_gap, t))
        return "\n".join(lines) + "\n"


def thread_count(threads=None):
    """Explicit ``threads``, else ``ANISOCAP_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("ANISOCAP_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be at least 1")
    return int(threads)


def relative_capacity(problem, h, sched=None, **kw):
    """Condenser capacity ``Cap(Ω̄; W_R)`` as the energy of the discrete minimiser.

    Returns
    -------
    value : float
    result : SolveResult
    """
    result = solve_annulus(problem, h, sched, **kw)
    return result.energy, result


def default_spacing(a, r1, R_max, node_cap=NODE_CAP, per_r1=32):
    """Power of two nearest ``r1/per_r1``, coarsened until the largest box fits ``node_cap``."""
    h = 2.0 ** round(math.log2(r1 / per_r1))
    if not h < r1 / 8:
        h /= 2
    extent = max(float(a.value(e)) for e in np.eye(a.dim)) * R_max
    while (2 * math.ceil(extent / h) + 3) ** a.dim > node_cap:
        h *= 2
    return h


def _annulus_law(R, cap_inf, rho, alpha, p):
    return cap_inf * (1.0 - (R / rho) ** alpha) ** (1.0 - p)


def fit_exterior_capacity(R, cap, alpha, p):
    """Least-squares fit of ``Cap(R) = Cap_∞ (1 - (R/ρ)^α)^{1-p}``.

    This is the exact law for Wulff annuli with ``ρ`` the inner radius; for
    other obstacles ``ρ`` is an effective radius.  Needs three entries.

    Returns
    -------
    cap_inf, rho : float
    """
    R = np.asarray(R, dtype=float)
    cap = np.asarray(cap, dtype=float)
    if len(R) < 3:
        raise ValueError("extrapolation needs at least three entries")
    # start from the two-point solution of the exact law
    ratio = (cap[-1] / cap[0]) ** (1.0 / (1.0 - p))
    # ratio = (1 - (R1/ρ)^α) / (1 - (R0/ρ)^α); solve for s = ρ^{-α}
    s = (ratio - 1.0) / (ratio * R[0] ** alpha - R[-1] ** alpha)
    rho0 = s ** (-1.0 / alpha) if s > 0 else 0.5 * R[0]
    rho0 = min(rho0, 0.99 * R[0])
    c0 = cap[-1] / (1.0 - (R[-1] / rho0) ** alpha) ** (1.0 - p)

    def resid(theta):
        return _annulus_law(R, theta[0], theta[1], alpha, p) / cap - 1.0

    sol = least_squares(resid, [c0, rho0], bounds=([0.0, 1e-12], [np.inf, R[0] * (1 - 1e-9)]),
                        xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return float(sol.x[0]), float(sol.x[1])


def _shared_violation(small, big):
    """``max (u_small - u_big)`` over interior nodes of the smaller grid."""
    gs, gb = small.grid, big.grid
    off = tuple(nb - ns for ns, nb in zip(gs.half_width, gb.half_width))
    view = tuple(slice(o, o + n) for o, n in zip(off, gs.shape))
    ub = big.u.values[view]
    mask = gs.interior
    return float(np.max(small.u.values[mask] - ub[mask]))


def capacity_sweep(domain, a, p, R_list, h=None, sched=None, threads=None, node_cap=NODE_CAP,
                   energy_gap=True, keep_results=False, seed=0):
    """Capacities for increasing ``R`` on nested grids, with the exterior limit.

    Parameters
    ----------
    R_list : sequence of float
        Strictly increasing radii, all beyond the obstacle.
    h : float, optional
        Common spacing; defaults to :func:`default_spacing`.
    energy_gap : bool
        Probe every entry with :func:`certify` for the energy-gap column.
    keep_results : bool
        Keep the full :class:`SolveResult` on each entry.

    Returns
    -------
    CapacityCurve
    """
    R_list = [float(R) for R in R_list]
    if any(b <= c for c, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    bounds = radius_bounds(a, domain)
    if R_list[0] <= bounds.r2:
        raise ValueError(f"every R must exceed r2 = {bounds.r2:.6g}")
    if h is None:
        h = default_spacing(a, bounds.r1, R_list[-1], node_cap)
    sched = Schedule() if sched is None else sched
    alpha = (p - a.dim) / (p - 1)

    def run(R):
        problem = AnnulusProblem(domain, R, a, p)
        value, res = relative_capacity(problem, h, sched, bounds=bounds)
        gap = certify(problem, res, seed=seed)["energy_gap"] if energy_gap else math.nan
        return CapacityEntry(R, value, gap, res.wall_time, res.summary(), res.converged, res)

    workers = min(thread_count(threads), len(R_list))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            entries = list(pool.map(run, R_list))
    else:
        entries = [run(R) for R in R_list]

    viol = max((_shared_violation(e0.result, e1.result) for e0, e1 in zip(entries, entries[1:])),
               default=math.nan)
    incr = max((e1.capacity - e0.capacity for e0, e1 in zip(entries, entries[1:])),
               default=math.nan)
    cap_inf, rho = math.nan, math.nan
    if len(entries) >= 3:
        tail = entries[-3:]
        cap_inf, rho = fit_exterior_capacity([e.R for e in tail], [e.capacity for e in tail],
                                             alpha, p)
    if not keep_results:
        for e in entries:
            e.result = None
    return CapacityCurve(entries, cap_inf, alpha, h, viol, incr, rho)


@dataclass
class SandwichReport:
    passed: bool
    tolerance: float
    lower_violation: float
    lower_location: list
    upper_violation: float
    upper_location: list

    def to_json(self):
        worst = max(self.lower_violation, self.upper_violation)
        loc = self.lower_location if self.lower_violation >= self.upper_violation \
            else self.upper_location
        return {"check": "sandwich", "pass": self.passed, "worst_value": worst,
                "worst_location": loc, "tolerance": self.tolerance,
                "lower_violation": self.lower_violation, "lower_location": self.lower_location,
                "upper_violation": self.upper_violation, "upper_location": self.upper_location}


def check_sandwich(problem, result, r1, r2, c_tol=5.0):
    """Nodewise ``v_{r1,R} - c h ≤ u_R ≤ v_{r2,R} + c h`` on interior nodes.

    Barriers are clipped to ``[0, 1]`` (the potential itself lies there).
    ``result`` may be a :class:`SolveResult` or a :class:`CapacityEntry`
    that kept its result.
    """
    result = getattr(result, "result", None) or result
    if not 0 < r1 <= r2 < problem.R:
        raise ValueError("need 0 < r1 <= r2 < R")
    g = result.grid
    mask = g.interior
    x = g.points()[mask]
    u = result.u.values[mask]
    a, p, R = problem.aniso, problem.p, problem.R
    lo = np.clip(barrier_v(a, p, r1, R, x), 0.0, 1.0)
    hi = np.clip(barrier_v(a, p, r2, R, x), 0.0, 1.0)
    dl = lo - u
    du = u - hi
    il, iu = int(np.argmax(dl)), int(np.argmax(du))
    tol = c_tol * g.h
    lv, uv = float(dl[il]), float(du[iu])
    return SandwichReport(lv <= tol and uv <= tol, tol, lv, x[il].tolist(), uv, x[iu].tolist())
