"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
The expensive solves are module fixtures shared between criteria; the
dual certificates of every one of them are checked by criterion 5.
"""

import math
import time

import numpy as np
import pytest

from anisocap.anisotropy import L1, Euclidean
from anisocap.capacity import capacity_sweep, check_sandwich
from anisocap.grid import build_grid
from anisocap.solver import Schedule, solve_annulus
from anisocap.verify import (calculus_properties, check_p1_example, comparison_test,
                             lipschitz_check, perimeter_l1_disk, uniqueness_test)
from anisocap.wulff import AnnulusProblem, annulus_capacity_exact, barrier_v, disk, wulff

P, R = 1.5, 2.0
EUCLID_H = (1 / 32, 1 / 64, 1 / 128)

# tolerances
RATE_MIN = 0.8
CAP_REL_TOL = 0.02
RUNTIME_MAX_S = 120.0
L1_ERR_MAX = 0.05
SANDWICH_C = 5.0
MONOTONE_SLACK = 1e-6
CAP_INF_REL_TOL = 0.03
FEAS_TOL = 1e-8
ALIGN_FRAC = 1e-3
WEAKDIV_C = 10.0
PROPS_RUNTIME_S = 10.0
COMPARISON_TOL = 1e-6
UNIQUENESS_TOL = 1e-5
LIP_SLACK = 5.0
P1_C = 5.0
PER1_TOL = 0.01


def _max_error(problem, res, r=1.0):
    g = res.grid
    v = np.clip(barrier_v(problem.aniso, problem.p, r, problem.R, g.points()), 0.0, 1.0)
    return float(np.max(np.abs(res.u.values - v)[g.interior]))


def _timed_solve(problem, h):
    t0 = time.perf_counter()
    res = solve_annulus(problem, h)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def euclid_runs():
    a = Euclidean()
    pr = AnnulusProblem(wulff(1, a), R, a, P)
    return pr, [(h, *_timed_solve(pr, h)) for h in EUCLID_H]


@pytest.fixture(scope="module")
def l1_run():
    a = L1()
    pr = AnnulusProblem(wulff(1, a), R, a, P)
    return pr, solve_annulus(pr, 1 / 64)


@pytest.fixture(scope="module")
def disk_run():
    pr = AnnulusProblem(disk(1), R, L1(), P)
    return pr, solve_annulus(pr, 1 / 64)


@pytest.fixture(scope="module")
def sweep():
    a = Euclidean()
    return capacity_sweep(wulff(1, a), a, P, [2, 4, 8], keep_results=True, energy_gap=False)


def test_criterion_1_euclidean_convergence(euclid_runs, acceptance_log):
    pr, runs = euclid_runs
    hs = np.array([h for h, _, _ in runs])
    errs = np.array([_max_error(pr, res) for _, res, _ in runs])
    rate = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    pair_rates = np.log2(errs[:-1] / errs[1:])
    exact = annulus_capacity_exact(pr.aniso, P, 1.0, R)
    cap_rel = abs(runs[-1][1].energy / exact - 1)
    times = [t for _, _, t in runs]
    ok = (rate >= RATE_MIN and cap_rel <= CAP_REL_TOL and max(times) <= RUNTIME_MAX_S
          and all(res.converged for _, res, _ in runs))
    acceptance_log(1, "exact-solution convergence (Euclidean)", ok,
                   f"errors {np.round(errs, 4).tolist()}, C=max err/h={np.max(errs / hs):.3f}, "
                   f"fitted rate {rate:.3f} (pairwise {np.round(pair_rates, 3).tolist()}) "
                   f">= {RATE_MIN}; capacity {runs[-1][1].energy:.5f} vs {exact:.5f} "
                   f"(rel {cap_rel:.4f} <= {CAP_REL_TOL}); max time {max(times):.1f}s "
                   f"<= {RUNTIME_MAX_S}s")
    assert ok


def test_criterion_2_crystalline_exact_solution(l1_run, acceptance_log):
    pr, res = l1_run
    err = _max_error(pr, res)
    exact = 8 * math.sqrt(2)
    assert annulus_capacity_exact(pr.aniso, P, 1.0, R) == pytest.approx(exact, rel=1e-10)
    cap_rel = abs(res.energy / exact - 1)
    ok = res.converged and err <= L1_ERR_MAX and cap_rel <= CAP_REL_TOL
    acceptance_log(2, "crystalline exact solution (l1)", ok,
                   f"max error {err:.4f} <= {L1_ERR_MAX}; capacity {res.energy:.5f} vs "
                   f"{exact:.5f} (rel {cap_rel:.4f} <= {CAP_REL_TOL})")
    assert ok


def test_criterion_3_sandwich_bounds(disk_run, acceptance_log):
    pr, res = disk_run
    rep = check_sandwich(pr, res, 1 / math.sqrt(2), 1.0, SANDWICH_C)
    control = check_sandwich(pr, res, 0.95, 1.0, SANDWICH_C)
    ok = res.converged and rep.passed and not control.passed
    acceptance_log(3, "sandwich bounds (disk under l1)", ok,
                   f"lower violation {rep.lower_violation:.2e}, upper {rep.upper_violation:.2e} "
                   f"<= {rep.tolerance:.4f}; control r1=0.95 violation "
                   f"{control.lower_violation:.4f} fails={not control.passed}")
    assert ok


def test_criterion_4_monotone_sweep(sweep, acceptance_log):
    target = 2 * math.pi
    rel = abs(sweep.extrapolated / target - 1)
    ok = (sweep.monotone_violation <= MONOTONE_SLACK and rel <= CAP_INF_REL_TOL
          and all(e.converged for e in sweep.entries))
    caps = [round(e.capacity, 5) for e in sweep.entries]
    acceptance_log(4, "monotone R-sweep", ok,
                   f"h={sweep.h:g}, capacities {caps}, max(u_R - u_R') "
                   f"{sweep.monotone_violation:.2e} <= {MONOTONE_SLACK}; Cap_inf "
                   f"{sweep.extrapolated:.4f} vs 2pi (rel {rel:.4f} <= {CAP_INF_REL_TOL})")
    assert ok


def test_criterion_5_euler_lagrange_certificates(euclid_runs, l1_run, disk_run, sweep,
                                                  acceptance_log):
    solves = [(f"euclidean h={h:g}", res) for h, res, _ in euclid_runs[1]]
    solves += [("l1 h=1/64", l1_run[1]), ("disk/l1 h=1/64", disk_run[1])]
    solves += [(f"sweep R={e.R:g}", e.result) for e in sweep.entries]
    worst = []
    ok = True
    for name, res in solves:
        if not res.converged:
            continue
        r = res.residuals
        checks = (r["dual_feasibility"] <= FEAS_TOL,
                  r["alignment"] <= ALIGN_FRAC * r["mean_F"],
                  r["weak_div"] <= WEAKDIV_C * res.grid.h * r["flux_max"])
        ok = ok and all(checks)
        worst.append(f"{name}: feas {r['dual_feasibility']:.1e}, align/meanF "
                     f"{r['alignment'] / r['mean_F']:.1e}, weakdiv/(h flux) "
                     f"{r['weak_div'] / (res.grid.h * r['flux_max']):.2f}")
    acceptance_log(5, "Euler-Lagrange certificates", ok,
                   f"{len(worst)} converged solves (limits {FEAS_TOL}, {ALIGN_FRAC}, "
                   f"{WEAKDIV_C}); " + "; ".join(worst))
    assert ok and worst


def test_criterion_6_property_suite(acceptance_log):
    t0 = time.perf_counter()
    reps = calculus_properties(n=1000, seed=0)
    elapsed = time.perf_counter() - t0
    failed = [r.check for r in reps if not r.passed]
    fd = max(r.worst_value for r in reps if r.check.endswith("finite_difference_gradient"))
    ok = not failed and elapsed <= PROPS_RUNTIME_S
    acceptance_log(6, "anisotropy calculus properties", ok,
                   f"{len(reps)} checks over 6 kinds, failures {failed}, worst FD rel err "
                   f"{fd:.1e} <= 1e-4, {elapsed:.1f}s <= {PROPS_RUNTIME_S}s")
    assert ok


def test_criterion_7_comparison_and_uniqueness(acceptance_log):
    a = L1()
    pr = AnnulusProblem(wulff(1, a), R, a, P)
    g = build_grid(pr, 1 / 16)
    sched = Schedule()
    phi2 = g.dirichlet_values()
    comp = comparison_test(pr, 0.5 * phi2, phi2, g, sched, eps=0.05, tol=COMPARISON_TOL)
    uni = uniqueness_test(pr, g, sched, eps=0.05, field_tol=UNIQUENESS_TOL)
    ok = comp.passed and uni.passed
    acceptance_log(7, "comparison principle and uniqueness", ok,
                   f"max(u1-u2) {comp.worst_value:.2e} <= {COMPARISON_TOL}; warm-start "
                   f"difference {uni.worst_value:.2e} <= {UNIQUENESS_TOL} "
                   f"(energy diff {uni.details['energy_difference']:.1e})")
    assert ok


def test_criterion_8_lipschitz(l1_run, acceptance_log):
    pr, res = l1_run
    rep = lipschitz_check(pr, res, 1.0, c_slack=LIP_SLACK)
    d = rep.details
    ok = bool(rep.passed)
    acceptance_log(8, "Lipschitz regularity", ok,
                   f"Lip_h {rep.worst_value:.4f} <= (C/c) max(L1={d['L1']:.4f}, "
                   f"L2={d['L2']:.4f}) + 5h = {rep.tolerance:.4f}; W_r condition "
                   f"{d['wulff_condition']}")
    assert ok


def test_criterion_9_p1_appendix(acceptance_log):
    ratios = {}
    ok = True
    parts = []
    for h in (1 / 64, 1 / 128):
        for E in ("E1", "E2"):
            reps = {r.check: r for r in check_p1_example(E, h, c=P1_C)}
            ok = ok and all(r.passed for r in reps.values())
            ratios.setdefault(h, reps["p1_weak_divergence"].details["ratio_to_h"])
            parts.append(f"{E} h={h:g}: |z|max {reps['p1_field_bound'].worst_value:.3f}, "
                         f"bc err {reps['p1_boundary_condition'].worst_value:.1e}")
    c_vals = list(ratios.values())
    c_stable = max(c_vals) <= P1_C and abs(c_vals[0] - c_vals[1]) <= 0.1 * max(c_vals)
    per = perimeter_l1_disk()
    ok = ok and c_stable and abs(per - 8) <= PER1_TOL
    acceptance_log(9, "p = 1 example", ok,
                   f"weak div / h = {np.round(c_vals, 4).tolist()} (c independent of h, "
                   f"<= {P1_C}); Per1(B1) = {per:.6f} (8 +- {PER1_TOL}); " + "; ".join(parts))
    assert ok
