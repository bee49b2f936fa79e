"""Discrete capacitary potentials of Wulff annuli against the radial barrier.

For Ω = W_1 the potential on W_2 \\ W̄_1 is the radial barrier, so the
error can be measured directly.  Halving h roughly halves the error.

Run: python demos/02_exact_annulus.py
"""

import numpy as np

from anisocap import AnnulusProblem, Euclidean, L1, annulus_capacity_exact, barrier_v, wulff
from anisocap import solve_annulus

for a in (Euclidean(), L1()):
    pr = AnnulusProblem(wulff(1, a), 2.0, a, 1.5)
    exact = annulus_capacity_exact(a, 1.5, 1.0, 2.0)
    print(f"{a!r}: exact capacity {exact:.5f}")
    for h in (1 / 16, 1 / 32):
        res = solve_annulus(pr, h)
        g = res.grid
        v = np.clip(barrier_v(a, 1.5, 1.0, 2.0, g.points()), 0, 1)
        err = np.max(np.abs(res.u.values - v)[g.interior])
        r = res.residuals
        print(f"  h={h:<8g} max error {err:.4f}  capacity {res.energy:.5f} "
              f"({res.energy / exact - 1:+.2%})  iterations {res.iterations:5d}  "
              f"{res.wall_time:5.1f}s  F°(z)-1={r['dual_feasibility']:.1e} "
              f"weak div {r['weak_div']:.3f}")
