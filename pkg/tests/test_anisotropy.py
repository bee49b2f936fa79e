import math

import numpy as np
import pytest

from anisocap.anisotropy import (L1, Euclidean, LInf, Polytope, ProxConfig, Regularized,
                                 WeightedL2, envelope_and_gradient, eval_F, eval_polar,
                                 k_lambda, kernel_spec, moreau_yosida_Fp, parse_anisotropy,
                                 resolvent_Fp, subgrad_F, subgrad_Fp, support_sampled_polar,
                                 yosida_grad_Fp)
from anisocap.errors import DimensionError

KINDS = [Euclidean(), L1(), LInf(), WeightedL2([1.0, 4.0]), Regularized(L1(), 0.1),
         Polytope([[1, 0], [0.5, 0.8], [-0.5, 0.8]])]


def test_worked_values():
    assert eval_F(L1(), [3, -4]) == 7
    assert eval_polar(L1(), [3, -4]) == 4
    assert eval_F(LInf(), [3, -4]) == 4
    assert eval_polar(LInf(), [3, -4]) == 7
    assert eval_F(Euclidean(), [3, 4]) == pytest.approx(5)
    assert eval_F(WeightedL2([1, 4]), [1, 1]) == pytest.approx(math.sqrt(5))
    assert eval_polar(WeightedL2([1, 4]), [1, 1]) == pytest.approx(math.sqrt(1.25))


def test_norm_constants():
    a = L1()
    assert (a.c, a.C) == pytest.approx((1.0, math.sqrt(2)))
    x = np.random.default_rng(0).normal(size=(500, 2))
    for k in KINDS:
        n = np.linalg.norm(x, axis=-1)
        v = k.value(x)
        assert np.all(v >= k.c * n * (1 - 1e-12))
        assert np.all(v <= k.C * n * (1 + 1e-12))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        L1().value(np.ones(3))


@pytest.mark.parametrize("a", KINDS, ids=repr)
def test_exact_polar_matches_sampled(a):
    x = np.random.default_rng(5).normal(size=(40, 2))
    assert np.allclose(a.polar(x), support_sampled_polar(a.value, x), rtol=1e-7)


def test_subgradients():
    assert np.allclose(subgrad_F(L1(), [[2.0, 0.0]]), [[1.0, 0.0]])
    # the face of l1 at (1,1) is a single vertex of the polar square
    assert np.allclose(subgrad_F(L1(), [[1.0, 1.0]]), [[1.0, 1.0]])
    assert np.allclose(subgrad_F(LInf(), [[1.0, 1.0]]), [[0.5, 0.5]])
    assert np.allclose(subgrad_F(Euclidean(), [[0.0, 0.0]]), [[0.0, 0.0]])
    g = subgrad_Fp(Euclidean(), 1.5, [[4.0, 0.0]])
    assert np.allclose(g, [[1.5 * 2.0, 0.0]])
    with pytest.raises(ValueError):
        subgrad_Fp(L1(), 1.0, [[1.0, 0.0]])


@pytest.mark.parametrize("a", KINDS, ids=repr)
def test_resolvent_optimality(a):
    p, lam = 1.5, 0.2
    cfg = ProxConfig(lam=lam)
    xi = np.random.default_rng(2).normal(size=(200, 2)) * 2
    eta = resolvent_Fp(a, p, cfg, xi)
    obj = np.sum((eta - xi) ** 2, axis=-1) / (2 * lam) + a.value(eta) ** p
    for d in (1e-4 * np.array(v) for v in ([1, 0], [0, 1], [-1, 0], [0, -1], [1, 1])):
        pert = np.sum((eta + d - xi) ** 2, axis=-1) / (2 * lam) + a.value(eta + d) ** p
        assert np.all(pert >= obj - 1e-12)


@pytest.mark.parametrize("a", KINDS, ids=repr)
def test_envelope_below_function_and_gradient(a):
    p, cfg = 1.5, ProxConfig(lam=0.1)
    xi = np.random.default_rng(3).normal(size=(100, 2))
    env = moreau_yosida_Fp(a, p, cfg, xi)
    assert np.all(env <= a.value(xi) ** p + 1e-12)
    g = yosida_grad_Fp(a, p, cfg, xi)
    step = 1e-6
    fd = np.stack([(moreau_yosida_Fp(a, p, cfg, xi + step * e)
                    - moreau_yosida_Fp(a, p, cfg, xi - step * e)) / (2 * step)
                   for e in np.eye(2)], axis=-1)
    assert np.allclose(g, fd, atol=1e-5, rtol=1e-4)


@pytest.mark.parametrize("a", [k for k in KINDS if kernel_spec(k) is not None], ids=repr)
@pytest.mark.parametrize("mu", [0.0, 0.05])
def test_kernel_route_matches_numpy_route(a, mu):
    xi = np.random.default_rng(4).normal(size=(300, 2)) * 3
    xi[:5] = 0.0
    xi[5:10, 1] = 0.0
    vk, gk, ek = envelope_and_gradient(a, 1.5, 0.05, xi, route="kernel", mu=mu)
    vn, gn, en = envelope_and_gradient(a, 1.5, 0.05, xi, route="numpy", mu=mu)
    assert np.allclose(vk, vn, rtol=1e-9, atol=1e-12)
    assert np.allclose(gk, gn, rtol=1e-8, atol=1e-10)
    assert np.allclose(ek, en, rtol=1e-8, atol=1e-10)


def test_kernel_missing_for_polytope():
    with pytest.raises(ValueError):
        envelope_and_gradient(KINDS[-1], 1.5, 0.1, np.ones((1, 2)), route="kernel")


def test_k_lambda():
    assert k_lambda(L1(), 1.5, 0.1) > 0
    with pytest.raises(ValueError):
        k_lambda(L1(), 2.5, 0.1)


def test_wulff_volumes():
    assert L1().wulff_volume() == pytest.approx(4.0)
    assert LInf().wulff_volume() == pytest.approx(2.0)
    assert Euclidean().wulff_volume() == pytest.approx(math.pi)
    assert WeightedL2([1, 4]).wulff_volume() == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("text,cls", [("euclidean", Euclidean), ("l1", L1), ("LINF", LInf),
                                      ("weighted-l2(1,4)", WeightedL2),
                                      ("regularized(l1,0.05)", Regularized),
                                      ("polytope(1,0;0,1)", Polytope)])
def test_parse(text, cls):
    assert isinstance(parse_anisotropy(text), cls)


def test_parse_rejects_unknown():
    with pytest.raises(ValueError):
        parse_anisotropy("l3")


def test_prox_config_validation():
    with pytest.raises(ValueError):
        ProxConfig(lam=0)
    with pytest.raises(ValueError):
        ProxConfig(tolerance=-1)
