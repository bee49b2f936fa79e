"""The p = 1 example: one explicit field certifying two different minimisers.

The field is -(sgn x, sgn y) inside the unit square and -(x, y)/‖(x, y)‖∞²
beyond it.  It is bounded by 1 in the l-inf sense, divergence free in the
weak sense up to the grid sampling error, and meets the boundary condition
on both the octagon E1 and the square E2.

Run: python demos/05_p1_example.py
"""

from anisocap import check_p1_example

for E in ("E1", "E2", "empty"):
    print(E)
    for r in check_p1_example(E, 1 / 128):
        status = {True: "pass", False: "FAIL", None: "n/a "}[r.passed]
        extra = r.details.get("status") or r.details.get("per1_E", "")
        print(f"  {status} {r.check:24s} worst {r.worst_value:.3e}  tol {r.tolerance:.3e}  "
              f"{extra}")
