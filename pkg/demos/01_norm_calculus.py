"""Norms, polars and the Moreau-Yosida calculus of F^p.

Run: python demos/01_norm_calculus.py
"""

import numpy as np

from anisocap import L1, Euclidean, LInf, Polytope, ProxConfig, WeightedL2
from anisocap import moreau_yosida_Fp, resolvent_Fp, subgrad_F, yosida_grad_Fp
from anisocap.anisotropy import envelope_and_gradient, support_sampled_polar

xi = np.array([3.0, -1.0])
print("F and its polar at", xi)
for a in (Euclidean(), L1(), LInf(), WeightedL2([1, 4]), Polytope([[1, 0], [0.5, 0.8],
                                                                   [-0.5, 0.8]])):
    sampled = support_sampled_polar(a.value, xi)
    print(f"  {a!r:42s} F={a.value(xi):.4f}  F°={a.polar(xi):.4f}  "
          f"(sampled sup: {sampled:.4f})  c={a.c:.3f} C={a.C:.3f}")

# at a kink of l1 the subdifferential is an edge of the l-inf unit square;
# the minimal section picks its midpoint
print("\nminimal subgradient of l1 at (2, 0):", subgrad_F(L1(), [2.0, 0.0]))

p, cfg = 1.5, ProxConfig(lam=0.1)
a = L1()
print("\nresolvent, envelope and gradient of l1^p, p=1.5, lambda=0.1")
for x in ([1.0, 0.0], [1.0, 1.0], [0.01, 0.0]):
    x = np.array(x)
    print(f"  xi={x}  J={resolvent_Fp(a, p, cfg, x)}  "
          f"env={moreau_yosida_Fp(a, p, cfg, x):.5f} <= F^p={a.value(x) ** p:.5f}  "
          f"grad={yosida_grad_Fp(a, p, cfg, x)}")

# the solver evaluates the envelope on whole grids through compiled kernels
pts = np.random.default_rng(0).normal(size=(100_000, 2))
vk, gk, _ = envelope_and_gradient(a, p, 0.1, pts, route="kernel")
vn, gn, _ = envelope_and_gradient(a, p, 0.1, pts, route="numpy")
print(f"\nkernel vs numpy routes on 1e5 points: max |Δvalue| {np.max(np.abs(vk - vn)):.1e}, "
      f"max |Δgrad| {np.max(np.abs(gk - gn)):.1e}")
