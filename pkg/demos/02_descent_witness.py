"""
A descent witness from local inversion
======================================

At (1, 1) the objective x1 is not stationary on the circle
x0^2 + x1^2 = 2. Stack the objective with the active constraint, take the
min-norm dual basis of their gradients, and invert
t -> (f_0, f_1)(x + V t) at (f_0(x) - nu, 0) with Newton's method. The
result stays on the circle and lowers the objective by exactly nu.
"""

import numpy as np

from kktcheck import ProblemSpec, active_set, descent_witness, eval_value, kkt_report

p = ProblemSpec.from_strings(2, "x1", ["x0^2 + x1^2 - 2"])
x = np.array([1.0, 1.0])
print(kkt_report(p, x).verdict)

A = active_set(p, x)
for nu in (1e-1, 1e-2, 1e-3):
    w = descent_witness(p, x, A, nu)
    print(f"nu = {nu:g}: x_nu = {w.x_nu}, drop = {w.objective_drop:.3e}, "
          f"|f_1(x_nu)| = {abs(eval_value(p.equalities[0], w.x_nu)):.1e}, "
          f"{w.newton_iters} Newton steps")

# The dual basis pairs with the gradient rows: T V = I.
print("dual basis columns:\n", w.basis)

# At a KKT point the objective gradient lies in the span of the active
# gradients and the construction reports a dependent family instead.
q = ProblemSpec.from_strings(2, "x0 + x1", ["x0^2 + x1^2 - 2"])
try:
    descent_witness(q, [-1.0, -1.0], active_set(q, [-1.0, -1.0]), 1e-3)
except Exception as err:
    print(type(err).__name__, "-", err)
