import math

import numpy as np
import pytest

from kktcheck import ProblemSpec
from kktcheck.errors import (DependentFamily, JacobianSingular, LicqFailure, NoConvergence,
                             PreconditionError)
from kktcheck.expr import eval_value
from kktcheck.kkt import active_set, feasibility_check, solve_multipliers
from kktcheck.witness import (NewtonConfig, constraint_curve, descent_witness, directional_slope,
                              newton_inverse, sign_witness)
from tests.conftest import ball_max, circle_min_x1, halfspace, orthant


def identity_map(t):
    return t.copy(), np.eye(t.size)


class TestNewtonInverse:
    def test_identity(self):
        res = newton_inverse(identity_map, [0.3, -0.2])
        np.testing.assert_allclose(res.t, [0.3, -0.2], atol=1e-15)
        assert res.iterations == 1

    def test_scalar_quadratic(self):
        # (1 + t/2)^2 - 1 = -0.19  =>  t = 2 (sqrt(0.81) - 1) = -0.2
        def F(t):
            return np.array([(1 + 0.5 * t[0]) ** 2 - 1]), np.array([[1 + 0.5 * t[0]]])

        res = newton_inverse(F, [-0.19])
        assert res.t[0] == pytest.approx(-0.2, abs=1e-12)
        assert res.residual <= 1e-12

    def test_outside_trust_radius(self):
        with pytest.raises(NoConvergence):
            newton_inverse(identity_map, [6.0, 8.0])

    def test_zero_target_no_iterations(self):
        res = newton_inverse(identity_map, [0.0, 0.0])
        assert res.iterations == 0 and not res.t.any()

    def test_singular_jacobian(self):
        def F(t):
            return t**2, np.diag(2 * t)

        with pytest.raises(JacobianSingular):
            newton_inverse(F, [0.1])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            NewtonConfig(backtrack=1.5)


class TestDescentWitness:
    def test_unconstrained_closed_form(self):
        p = ProblemSpec.from_strings(2, "x0^2 + x1^2")
        w = descent_witness(p, [1, 0], active_set(p, [1, 0]), 0.19)
        np.testing.assert_allclose(w.x_nu, [0.9, 0.0], atol=1e-12)
        assert w.t_nu[0] == pytest.approx(-0.2, abs=1e-12)
        assert w.objective_drop == pytest.approx(0.19, abs=1e-12)

    def test_circle_min_x1(self):
        p = circle_min_x1()
        w = descent_witness(p, [1, 1], active_set(p, [1, 1]), 1e-3)
        np.testing.assert_allclose(w.basis, [[-1.0, 0.5], [1.0, 0.0]], atol=1e-14)
        assert abs(eval_value(p.objective, w.x_nu) - (1 - 1e-3)) <= 1e-10
        assert abs(eval_value(p.equalities[0], w.x_nu)) <= 1e-10
        assert w.jacobian_deviation <= 1e-8

    def test_collinear_family(self):
        p = ball_max()
        with pytest.raises(DependentFamily):
            descent_witness(p, [1, 0], active_set(p, [1, 0]), 1e-3)

    def test_nu_is_halved_when_out_of_reach(self):
        p = ProblemSpec.from_strings(2, "x0^2 + x1^2")
        w = descent_witness(p, [1, 0], active_set(p, [1, 0]), 5.0)
        assert w.requested_nu == 5.0 and w.nu == 0.625
        assert w.objective_drop == pytest.approx(0.625, abs=1e-12)

    def test_inactive_inequality_shrinks_nu(self):
        p = ProblemSpec.from_strings(2, "x0^2 + x1^2", [], ["0.95 - x0"])
        A = active_set(p, [1, 0])
        assert A.indices == ()
        w = descent_witness(p, [1, 0], A, 0.19)
        assert w.nu == pytest.approx(0.095)
        assert feasibility_check(p, w.x_nu)[0]

    def test_respects_box(self):
        p = ProblemSpec.from_strings(1, "x0", domain_box=((0.9, 2.0),))
        w = descent_witness(p, [1.0], active_set(p, [1.0]), 0.5)
        assert p.in_domain(w.x_nu) and w.nu < 0.1

    def test_nonpositive_nu(self):
        p = circle_min_x1()
        with pytest.raises(ValueError):
            descent_witness(p, [1, 1], active_set(p, [1, 1]), 0.0)


class TestConstraintCurve:
    def test_ball_max_closed_form(self):
        p = ball_max()
        c = constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [0.19])
        np.testing.assert_allclose(c.points[0], [0.9, 0.0], atol=1e-12)
        assert eval_value(p.inequalities[0], c.points[0]) == pytest.approx(-0.19, abs=1e-12)

    def test_zero_epsilon_is_exact(self):
        p = ball_max()
        c = constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [0.0])
        np.testing.assert_array_equal(c.points[0], [1.0, 0.0])
        assert c.newton_iters == (0,)

    def test_two_active_constraints(self):
        p = ProblemSpec.from_strings(2, "x0", ["x0^2 + x1^2 - 2"], ["-x1"])
        x = [math.sqrt(2), 0.0]
        eps = 1e-3
        c = constraint_curve(p, x, active_set(p, x), 1, [eps])
        y = c.points[0]
        assert y[1] == pytest.approx(eps, abs=1e-10)
        assert abs(y[0] ** 2 + y[1] ** 2 - 2) <= 1e-10
        assert y[0] == pytest.approx(math.sqrt(2 - eps**2), abs=1e-10)

    def test_invariants_hold_along_curve(self):
        p = ProblemSpec.from_strings(3, "x0 + x1 + x2", ["x0^2 + x1^2 + x2^2 - 3"],
                                     ["1 - x0*x1^2", "x2 - 1"])
        x = [1.0, 1.0, 1.0]
        A = active_set(p, x)
        eps = [0.0, 1e-4, 1e-3, 1e-2]
        c = constraint_curve(p, x, A, 2, eps)
        for e, y in zip(eps, c.points):
            assert abs(eval_value(p.inequalities[1], y) + e) <= 1e-10
            assert abs(eval_value(p.inequalities[0], y)) <= 1e-10
            assert abs(eval_value(p.equalities[0], y)) <= 1e-10
        assert c.max_deviation <= 1e-10 and c.jacobian_deviation <= 1e-8

    def test_inactive_j0(self):
        p = halfspace()
        with pytest.raises(PreconditionError):
            constraint_curve(p, [2, 0], active_set(p, [2, 0]), 1, [0.1])

    def test_licq_failure(self):
        p = ProblemSpec.from_strings(2, "x0", [], ["x0^2 + x1^2 - 1", "1 - x0^2 - x1^2"])
        with pytest.raises(LicqFailure):
            constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [0.1])

    def test_tangent_is_minus_dual_vector(self):
        p = ProblemSpec.from_strings(2, "x0", ["x0^2 + x1^2 - 2"], ["-x1"])
        x = np.array([math.sqrt(2), 0.0])
        eps = [1e-2, 1e-3, 1e-4]
        c = constraint_curve(p, x, active_set(p, x), 1, eps)
        errs = [np.linalg.norm((y - x) / e + c.w_j0) for e, y in zip(eps, c.points)]
        for e, err in zip(eps, errs):
            assert err <= 10 * e
        for a, b in zip(errs, errs[1:]):
            assert 5 <= a / b <= 20


class TestSlope:
    def test_ball_max(self):
        p = ball_max()
        c = constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [0.0, 1e-5])
        s = directional_slope(p, c)
        assert s.finite_difference == pytest.approx(-0.5, abs=1e-4)
        assert s.analytic == pytest.approx(-0.5, abs=1e-12)

    def test_halfspace(self):
        p = halfspace()
        c = constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [0.0, 1e-5])
        np.testing.assert_allclose(c.points[1], [1 + 1e-5, 0.0], atol=1e-14)
        assert directional_slope(p, c).finite_difference == pytest.approx(2.0, abs=1e-4)

    def test_constant_objective(self):
        p = ProblemSpec.from_strings(2, "3", [], ["x0^2 + x1^2 - 1"])
        c = constraint_curve(p, [0, 1], active_set(p, [0, 1]), 1, [0.0, 1e-3])
        assert directional_slope(p, c) == (0.0, 0.0)

    def test_needs_zero_and_positive_epsilon(self):
        p = ball_max()
        c = constraint_curve(p, [1, 0], active_set(p, [1, 0]), 1, [1e-3])
        with pytest.raises(PreconditionError):
            directional_slope(p, c)

    def test_matches_multiplier(self):
        p = ProblemSpec.from_strings(3, "x0*x1 + x2^2 + sin(x0)",
                                     ["x0 + x1 + x2 - 1"], ["x0^2 - x1", "-x2"])
        x = np.array([0.5, 0.25, 0.25])
        A = active_set(p, x)
        assert A.indices == (1, 2)
        mult, _ = solve_multipliers(p, x, A)
        c = constraint_curve(p, x, A, 1, [0.0, 1e-5])
        s = directional_slope(p, c)
        assert abs(s.analytic - mult.mu[0]) <= 1e-8
        assert abs(s.finite_difference - mult.mu[0]) <= 1e-4


class TestSignWitness:
    def test_ball_max(self):
        p = ball_max()
        w = sign_witness(p, [1, 0], active_set(p, [1, 0]), 1)
        assert w.x_prime[0] < 1 and w.x_prime @ w.x_prime <= 1
        assert w.epsilon == 0.01
        np.testing.assert_allclose(w.x_prime, [math.sqrt(0.99), 0.0], atol=1e-12)
        assert w.objective_drop >= 0.25 * 0.5 * w.epsilon

    def test_refuses_positive_multiplier(self):
        p = ProblemSpec.from_strings(2, "-x0", [], ["x0 - 1"])
        with pytest.raises(PreconditionError):
            sign_witness(p, [1, 0], active_set(p, [1, 0]), 1)

    def test_refuses_at_true_minimizer(self):
        p = orthant()
        for j in (1, 2):
            with pytest.raises(PreconditionError):
                sign_witness(p, [0, 0], active_set(p, [0, 0]), j)

    def test_shrinks_step_for_inactive_constraint(self):
        p = ProblemSpec.from_strings(2, "x0", [], ["x0^2 + x1^2 - 1", "0.999 - x0"])
        A = active_set(p, [1, 0])
        w = sign_witness(p, [1, 0], A, 1)
        assert w.epsilon < 0.002
        assert feasibility_check(p, w.x_prime)[0]
