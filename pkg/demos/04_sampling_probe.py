"""
A brute-force probe for local minimality
========================================

Independent of any multiplier computation: sample a ball around the point,
project samples back onto the equality (and violated active inequality)
surface with Gauss-Newton, and look for a feasible point with lower
objective. Each sample has its own Philox stream keyed by (seed, index),
so the result does not depend on evaluation order.
"""

from kktcheck import ProblemSpec, local_min_probe

circle = ProblemSpec.from_strings(2, "x0 + x1", ["x0^2 + x1^2 - 2"])
ball_max = ProblemSpec.from_strings(2, "x0", [], ["x0^2 + x1^2 - 1"])

r = local_min_probe(circle, [-1.0, -1.0], radius=0.1, samples=5000, seed=0)
print("circle minimizer:", "no counterexample found" if not r.found else r.counterexample)
print("  best feasible value %.12f vs %.12f" % (r.best_feasible_value, r.reference_value))

r = local_min_probe(ball_max, [1.0, 0.0], radius=0.1, samples=5000, seed=0)
print("ball max: counterexample", r.counterexample)
print("generator:", r.generator)
