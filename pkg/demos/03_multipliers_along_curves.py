"""
Multiplier signs along constraint curves
========================================

Relaxing an active inequality f_j <= 0 to f_j = -eps, while holding the other
active constraints at 0, traces a curve whose tangent at eps = 0 is -w_j (w_j
being the matching dual-basis vector). The objective slope along it equals
the multiplier mu_j, so a negative multiplier means the curve goes downhill
into the feasible set.
"""

import numpy as np

from kktcheck import (ProblemSpec, active_set, constraint_curve, directional_slope,
                      sign_witness, solve_multipliers)

# (1, 0) maximizes x0 on the unit disc
p = ProblemSpec.from_strings(2, "x0", [], ["x0^2 + x1^2 - 1"])
x = np.array([1.0, 0.0])
A = active_set(p, x)
mult, _ = solve_multipliers(p, x, A)

eps = [0.0, 1e-5, 1e-4, 1e-3, 1e-2]
curve = constraint_curve(p, x, A, 1, eps)
slope = directional_slope(p, curve)
print("mu_1 from least squares:", mult.mu[0])
print("slope by forward difference:", slope.finite_difference)
print("slope -f0'(x).w_1:", slope.analytic)

# first-order tangent error, shrinking tenfold per decade of eps
for e, y in zip(eps[1:], curve.points[1:]):
    print(f"eps = {e:g}: |(x(eps) - x)/eps + w_1| = {np.linalg.norm((y - x) / e + curve.w_j0):.2e}")

w = sign_witness(p, x, A, 1)
print("sign witness:", w.x_prime, "objective drop", w.objective_drop)

# At the minimizer of |x|^2 over x0 >= 1 the slope is +2 and no witness exists.
q = ProblemSpec.from_strings(2, "x0^2 + x1^2", [], ["1 - x0"])
c = constraint_curve(q, x, active_set(q, x), 1, [0.0, 1e-5])
print("halfspace slope:", directional_slope(q, c))
