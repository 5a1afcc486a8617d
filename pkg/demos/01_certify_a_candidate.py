"""
Certifying a candidate point
============================

Read a problem file, check the first-order conditions at its candidate
point, and compare the multipliers on Hock-Schittkowski problem 71 with the
published solution (0.55229366 on the product constraint, 0.16146857 on
the sphere, 1.08787121 on the bound x0 >= 1).
"""

from pathlib import Path

import numpy as np

from kktcheck import kkt_report, load_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

p = load_problem(PROBLEMS / "hs071.kkt")
report = kkt_report(p)

print("verdict:", report.verdict)
print("active constraints:", report.active_set.indices)
print("LICQ singular values:", np.round(report.licq.singular_values, 4))
print("lambda:", report.multipliers.lam)
print("mu:", report.multipliers.mu)
print("stationarity residual: %.2e (tolerance %.2e)"
      % (report.stationarity_residual, report.tol_stat))

# Inactive bounds carry mu = 0 and contribute exactly 0 to complementarity.
print("complementarity:", report.complementarity)

# The same call refutes points that are not minimizers.
for name, point in [("ball-max.kkt", None), ("circle.kkt", (0.0, 0.0))]:
    q = load_problem(PROBLEMS / name)
    r = kkt_report(q, point)
    print(f"{name} at {r.point}: {r.verdict}")
