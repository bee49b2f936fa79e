import math

import numpy as np
import pytest

from anisocap.anisotropy import L1, Euclidean
from anisocap.capacity import (capacity_sweep, check_sandwich, default_spacing,
                               fit_exterior_capacity, thread_count)
from anisocap.solver import solve_annulus
from anisocap.wulff import AnnulusProblem, annulus_capacity_closed_form, wulff


def test_fit_recovers_exact_law():
    a, p = Euclidean(), 1.5
    R = np.array([2.0, 4.0, 8.0])
    cap = [annulus_capacity_closed_form(a, p, 1.0, r) for r in R]
    cap_inf, rho = fit_exterior_capacity(R, cap, -1.0, p)
    assert cap_inf == pytest.approx(2 * math.pi, rel=1e-8)
    assert rho == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        fit_exterior_capacity(R[:2], cap[:2], -1.0, p)


def test_default_spacing():
    h = default_spacing(Euclidean(), 1.0, 8.0)
    assert h == 1 / 32
    assert default_spacing(Euclidean(), 1.0, 8.0, node_cap=10_000) > h


def test_thread_count(monkeypatch):
    monkeypatch.delenv("ANISOCAP_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("ANISOCAP_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    with pytest.raises(ValueError):
        thread_count(0)


def test_sweep_small():
    a = Euclidean()
    curve = capacity_sweep(wulff(1, a), a, 1.5, [2, 3, 4], h=1 / 16, energy_gap=False)
    caps = [e.capacity for e in curve.entries]
    assert caps == sorted(caps, reverse=True)
    assert curve.monotone_violation <= 1e-6
    assert abs(curve.extrapolated / (2 * math.pi) - 1) < 0.05
    js = curve.to_json(timing=False)
    assert all(e["wall_time_s"] == 0.0 for e in js["entries"])
    assert curve.to_csv().splitlines()[0] == "R,capacity,energy_gap,wall_time_s"
    assert all(e.result is None for e in curve.entries)


def test_sweep_validation():
    a = Euclidean()
    with pytest.raises(ValueError):
        capacity_sweep(wulff(1, a), a, 1.5, [3, 2])
    with pytest.raises(ValueError):
        capacity_sweep(wulff(1, a), a, 1.5, [0.9, 2])


def test_sandwich_on_wulff_annulus():
    a = L1()
    pr = AnnulusProblem(wulff(1, a), 2.0, a, 1.5)
    res = solve_annulus(pr, 1 / 16)
    rep = check_sandwich(pr, res, 1.0, 1.0)
    assert rep.passed
    assert rep.to_json()["check"] == "sandwich"
    # r1 well above the true radius makes the lower barrier exceed u
    bad = check_sandwich(pr, res, 1.9, 1.9)
    assert not bad.passed
    with pytest.raises(ValueError):
        check_sandwich(pr, res, 1.0, 2.5)
