"""A Euclidean disk obstacle under the crystalline l1 norm.

The disk is not a Wulff shape of l1, so there is no closed form; the
potential is instead trapped between the barriers of the inscribed and
circumscribed Wulff squares W_{1/√2} ⊆ B_1 ⊆ W_1.  Moving the inner radius
up to 0.95 breaks the lower bound, which the check reports.

Run: python demos/03_barriers_on_a_disk.py
"""

import math

from anisocap import AnnulusProblem, L1, check_sandwich, disk, radius_bounds, solve_annulus

a = L1()
pr = AnnulusProblem(disk(1), 2.0, a, 1.5)
b = radius_bounds(a, pr.domain)
print(f"sampled radii: r1={b.r1:.5f} (1/√2={1 / math.sqrt(2):.5f}), r2={b.r2:.5f}")

res = solve_annulus(pr, 1 / 32)
print(f"solved h=1/32 in {res.wall_time:.1f}s, capacity {res.energy:.5f}")
for r1 in (1 / math.sqrt(2), 0.95):
    rep = check_sandwich(pr, res, r1, 1.0)
    print(f"  r1={r1:.4f}: lower violation {rep.lower_violation:+.4f} at {rep.lower_location}, "
          f"upper {rep.upper_violation:+.4f}, tolerance {rep.tolerance:.4f} -> "
          f"{'pass' if rep.passed else 'FAIL'}")
