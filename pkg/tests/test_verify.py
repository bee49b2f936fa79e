import math

import numpy as np
import pytest

from anisocap.anisotropy import L1, Euclidean, Regularized
from anisocap.grid import build_grid
from anisocap.solver import Schedule, solve_annulus
from anisocap.verify import (P1Example, calculus_properties, check_p1_example,
                             comparison_test, discrete_lipschitz, lipschitz_check, p1_field,
                             p1_sets, perimeter_l1_disk, uniqueness_test)
from anisocap.wulff import AnnulusProblem, WulffCheck, disk, polygon, wulff


def test_p1_field_branches():
    assert np.allclose(p1_field(0.9, -0.6), [-1, 1])
    assert np.allclose(p1_field(1.2, 0.5), [-1 / 1.2, -0.5 / 1.44])
    assert np.allclose(p1_field(1.5, 0.0), [-1 / 1.5, 0])
    assert np.allclose(p1_field(-1.0, 1.5), [1 / 2.25, -1.5 / 2.25])
    with pytest.raises(ValueError):
        p1_field(0.5, 0.5)
    with pytest.raises(ValueError):
        p1_field(2.0, 0.0)


def test_p1_example_masks():
    ex = P1Example.build(1 / 16)
    m = ex.test_mask()
    assert m.sum() > 0 and np.all(ex.annulus[m])
    assert np.all(np.max(np.abs(ex.z), axis=-1) <= 1.0)


def test_perimeter_of_unit_disk():
    assert perimeter_l1_disk() == pytest.approx(8.0, abs=1e-10)


def test_p1_sets_lengths():
    sets = p1_sets()
    assert sets["empty"] == []
    per1 = sum(np.linalg.norm(b - a) * np.sum(np.abs(n)) for a, b, n in sets["E2"])
    assert per1 == pytest.approx(8.0)


@pytest.mark.parametrize("E", ["E1", "E2"])
def test_p1_checks_pass(E):
    reps = check_p1_example(E, 1 / 64)
    assert [r.check for r in reps] == ["p1_field_bound", "p1_weak_divergence",
                                       "p1_boundary_condition", "p1_perimeter_identity"]
    assert all(r.passed for r in reps)


def test_p1_empty_is_reported_unchecked():
    reps = check_p1_example("empty", 1 / 64)
    assert reps[0].passed and reps[1].passed
    assert reps[2].passed is None and "not checked" in reps[2].details["status"]
    assert reps[3].to_json()["pass"] is None


def test_p1_input_validation():
    with pytest.raises(ValueError):
        check_p1_example("E3", 1 / 64)
    with pytest.raises(ValueError):
        check_p1_example("E1", 1 / 32)


def test_discrete_lipschitz_linear():
    pr = AnnulusProblem(disk(1), 2.0, Euclidean(), 1.5)
    g = build_grid(pr, 1 / 10)
    lip, _ = discrete_lipschitz(g, 3 * g.points()[..., 0])
    assert lip == pytest.approx(3.0)


@pytest.fixture(scope="module")
def l1_sixteen():
    pr = AnnulusProblem(wulff(1, L1()), 2.0, L1(), 1.5)
    return pr, solve_annulus(pr, 1 / 16)


def test_lipschitz_check_passes(l1_sixteen):
    pr, res = l1_sixteen
    rep = lipschitz_check(pr, res, 1.0)
    assert rep.passed
    assert rep.details["wulff_condition"]
    assert rep.tolerance == pytest.approx(
        math.sqrt(2) * max(rep.details["L1"], rep.details["L2"]) + 5 / 16)


def test_lipschitz_refuses_without_wulff_condition(l1_sixteen):
    pr, res = l1_sixteen
    rep = lipschitz_check(pr, res, 1.0, wulff=WulffCheck(False, np.zeros(2), 0.3, 1e-6))
    assert rep.passed is False and "not certified" in rep.details["status"]


def test_comparison_and_uniqueness_coarse():
    a = L1()
    pr = AnnulusProblem(wulff(1, a), 2.0, a, 1.5)
    g = build_grid(pr, 1 / 10)
    sched = Schedule(tol=1e-6)
    rep = comparison_test(pr, lambda x: np.where(g.inner, 0.5, 0.0), g.dirichlet_values(), g,
                          sched)
    assert rep.passed and rep.worst_value <= 1e-6
    assert "Regularized" in rep.details["aniso"]
    with pytest.raises(ValueError):
        comparison_test(pr, g.dirichlet_values(), 0.5 * g.dirichlet_values(), g, sched)
    uni = uniqueness_test(pr, g, sched)
    assert uni.passed


def test_strict_convexity_required():
    pr = AnnulusProblem(wulff(1, L1()), 2.0, L1(), 1.5)
    g = build_grid(pr, 1 / 10)
    with pytest.raises(ValueError):
        uniqueness_test(pr, g, eps=0.0)


def test_property_suite_small():
    reps = calculus_properties({"l1": L1(), "reg": Regularized(L1(), 0.2)}, n=100, n_fd=20,
                               seed=3)
    assert reps and all(r.passed for r in reps)
    names = {r.check.split(":")[1] for r in reps}
    assert {"homogeneity", "bipolarity", "envelope_upper", "envelope_lower",
            "finite_difference_gradient"} <= names


def test_square_fails_euclidean_wulff_condition_in_lipschitz():
    sq = polygon([[1, 1], [-1, 1], [-1, -1], [1, -1]])
    pr = AnnulusProblem(sq, 3.0, Euclidean(), 1.5)
    res = solve_annulus(pr, 1 / 10)
    rep = lipschitz_check(pr, res, 0.5)
    assert rep.passed is False and not rep.details["wulff_condition"]
