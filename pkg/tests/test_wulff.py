import math

import pytest

from anisocap.anisotropy import L1, Euclidean, LInf
from anisocap.errors import GeometryError
from anisocap.wulff import (annulus_capacity_closed_form, annulus_capacity_exact, barrier_v,
                            check_wulff_condition, disk, ellipse, lipschitz_bound_L1,
                            parse_domain, polygon, radial_potential, radius_bounds, wulff,
                            wulff_contains)


def test_wulff_contains():
    assert wulff_contains(L1(), 1.0, [0.9, 0.9])   # l-inf norm 0.9
    assert not wulff_contains(L1(), 1.0, [1.1, 0.0])
    assert not wulff_contains(LInf(), 1.0, [0.6, 0.6])
    with pytest.raises(ValueError):
        wulff_contains(L1(), 0.0, [0, 0])


def test_radius_bounds_disk_under_l1():
    b = radius_bounds(L1(), disk(1))
    assert b.r1 == pytest.approx(1 / math.sqrt(2), abs=2 * b.tol)
    assert b.r2 == pytest.approx(1.0, abs=2 * b.tol)
    assert b.r1 <= 1 / math.sqrt(2) and b.r2 >= 1.0


def test_barrier_boundary_values():
    a = Euclidean()
    assert barrier_v(a, 1.5, 1.0, 2.0, [1.0, 0.0]) == pytest.approx(1.0)
    assert barrier_v(a, 1.5, 1.0, 2.0, [0.0, 2.0]) == pytest.approx(0.0)
    assert radial_potential(a, 1.5, 1.0, [0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        radial_potential(a, 1.5, 1.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        barrier_v(a, 2.5, 1.0, 2.0, [1.0, 0.0])


@pytest.mark.parametrize("a,expected", [(Euclidean(), 2 * math.sqrt(2) * math.pi),
                                        (L1(), 8 * math.sqrt(2))])
def test_annulus_capacity_oracles(a, expected):
    assert annulus_capacity_exact(a, 1.5, 1.0, 2.0) == pytest.approx(expected, rel=1e-9)
    assert annulus_capacity_closed_form(a, 1.5, 1.0, 2.0) == pytest.approx(expected, rel=1e-9)


def test_exterior_capacity_limit():
    assert annulus_capacity_closed_form(Euclidean(), 1.5, 1.0, math.inf) == pytest.approx(
        2 * math.pi)


def test_capacity_by_raw_quadrature():
    # direct 2-D quadrature of |grad v|^p over the Euclidean annulus
    from scipy.integrate import dblquad
    al = -1.0

    def f(r, t):
        dv = abs(al * r ** (al - 1) / (1 - 2 ** al))
        return dv ** 1.5 * r

    val, _ = dblquad(f, 0, 2 * math.pi, 1, 2)
    assert val == pytest.approx(annulus_capacity_exact(Euclidean(), 1.5, 1.0, 2.0), rel=1e-8)


def test_lipschitz_bound():
    assert lipschitz_bound_L1(L1(), 1.5, 2, 1.0, 1.5) > 0
    with pytest.raises(ValueError):
        lipschitz_bound_L1(L1(), 1.5, 2, 2.0, 1.5)


def test_wulff_condition():
    assert check_wulff_condition(L1(), wulff(1, L1()), 1.0).ok
    assert check_wulff_condition(Euclidean(), disk(1), 0.99).ok
    # a square obstacle has corners no Euclidean disk can touch from inside
    sq = polygon([[1, 1], [-1, 1], [-1, -1], [1, -1]])
    assert not check_wulff_condition(Euclidean(), sq, 0.5).ok


def test_domains(tmp_path):
    assert ellipse(2, 1).contains([1.9, 0.0])
    assert not ellipse(2, 1).contains([0.0, 1.1])
    path = tmp_path / "tri.txt"
    path.write_text("1 0\n0 1\n-1 -1\n")
    d = parse_domain(f"polygon({path.name})", L1(), base_dir=tmp_path)
    assert d.contains([0.1, 0.1])
    with pytest.raises(GeometryError):
        polygon([[1, 0], [-1, -1], [0, 1]])  # clockwise
    with pytest.raises(ValueError):
        parse_domain("star(3)", L1())
    assert parse_domain("wulff(1)", L1()).name == "wulff(1)"
