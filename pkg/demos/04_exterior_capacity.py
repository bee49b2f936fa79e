"""Relative capacities for growing R and the extrapolated exterior capacity.

For p < N the exterior capacity of W_1 is N |W_1| |α|^{p-1} with
α = (p - N)/(p - 1); for the Euclidean disk and p = 1.5 that is 2π.

Run: python demos/04_exterior_capacity.py
"""

import math

from anisocap import Euclidean, capacity_sweep, wulff

a = Euclidean()
curve = capacity_sweep(wulff(1, a), a, 1.5, [2, 4, 8], h=1 / 16)
print(f"common spacing h={curve.h:g}")
for e in curve.entries:
    print(f"  R={e.R:<3g} capacity {e.capacity:.5f}  energy gap {e.energy_gap:.1e}  "
          f"{e.wall_time:.1f}s")
print(f"fields increase with R: max(u_R - u_R') = {curve.monotone_violation:.2e}")
print(f"extrapolated capacity {curve.extrapolated:.4f} vs 2π = {2 * math.pi:.4f} "
      f"({curve.extrapolated / (2 * math.pi) - 1:+.2%}), effective radius {curve.fit_radius:.4f}")
