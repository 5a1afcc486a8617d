"""Constructive witnesses of non-optimality, realized by Newton local inversion.

Two charts are used, both of the form ``t -> [f_i(x + V t)]_{i in family}``
where the columns of ``V`` are the min-norm dual basis of the family's
gradients at ``x``. By construction the Jacobian of the chart at ``t = 0``
is the identity, so damped Newton started from ``t = 0`` inverts it on a
neighbourhood of ``F(0)``.

* descent chart: family = {objective} + active constraints. Inverting it at
  ``(f_0(x) - nu, 0, ..., 0)`` gives a point that keeps every active
  constraint at 0 while lowering the objective by exactly ``nu``. It exists
  only when grad f_0 is independent of the active gradients.
* constraint chart: family = active constraints. Inverting it at
  ``-eps * e_{j0}`` traces a curve that relaxes inequality ``j0`` to
  ``-eps`` and holds the others at 0; its tangent at eps = 0 is ``-w_{j0}``
  and the objective slope along it equals ``mu_{j0}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (DependentFamily, DomainError, IdentityCheckFailed, JacobianSingular,
                     LicqFailure, NoConvergence, NoDescentFound, OutsideDomain,
                     PreconditionError, RankDeficient)
from .expr import ProblemSpec, eval_gradient, eval_value
from .kkt import (ActiveSet, Tolerances, check_point, constraint_values, gradient_rows,
                  solve_multipliers, violation)
from .linalg import DualBasis, dual_basis, rank_with_tolerance

IDENTITY_TOL = 1e-8
MIN_EPSILON = 1e-12


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 50
    tol_residual: float = 1e-12
    max_step_radius: float = 1.0
    backtrack: float = 0.5
    max_halvings: int = 30
    max_shrinks: int = 40  # halvings of nu when the target is out of reach

    def __post_init__(self):
        if min(self.max_iters, self.tol_residual, self.max_step_radius,
               self.max_halvings, self.max_shrinks) <= 0 or not 0 < self.backtrack < 1:
            raise ValueError("NewtonConfig entries must be positive, backtrack in (0, 1)")


class NewtonResult(NamedTuple):
    t: np.ndarray
    iterations: int
    residual: float  # infinity norm of F(t) - target


ChartMap = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def newton_inverse(F: ChartMap, target, cfg: NewtonConfig = NewtonConfig()) -> NewtonResult:
    """Solve ``F(t) = target`` by damped Newton from ``t = 0``.

    ``F`` returns ``(value, jacobian)``. Trial points outside the ball of
    radius ``cfg.max_step_radius``, or where ``F`` leaves its domain, are
    treated like insufficient decrease and the step is halved.
    """
    target = np.asarray(target, dtype=float)
    t = np.zeros(target.size)
    val, J = F(t)
    r = val - target
    for it in range(cfg.max_iters + 1):
        res = float(np.max(np.abs(r))) if r.size else 0.0
        if res <= cfg.tol_residual:
            return NewtonResult(t, it, res)
        if it == cfg.max_iters:
            break
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise JacobianSingular(f"singular Jacobian at Newton iterate {it}") from None
        merit = float(np.linalg.norm(r))
        alpha = 1.0
        for _ in range(cfg.max_halvings + 1):
            cand = t + alpha * step
            if np.linalg.norm(cand) <= cfg.max_step_radius:
                try:
                    v2, J2 = F(cand)
                except (DomainError, OutsideDomain):
                    pass
                else:
                    r2 = v2 - target
                    if (np.linalg.norm(r2) <= (1.0 - 1e-4 * alpha) * merit
                            or np.max(np.abs(r2)) <= cfg.tol_residual):
                        t, r, J = cand, r2, J2
                        break
            alpha *= cfg.backtrack
        else:
            raise NoConvergence(
                f"line search failed at iterate {it} (residual {res:.3g}); "
                "target is outside the reachable neighbourhood")
    raise NoConvergence(f"no convergence in {cfg.max_iters} iterations")


def chart_map(p: ProblemSpec, x: np.ndarray, family: Sequence[int], V: np.ndarray) -> ChartMap:
    """t -> ([f_i(x + V t)]_i, [f_i'(x + V t) V]_i) for i in ``family`` (0 = objective)."""
    exprs = [p.constraint(i) for i in family]

    def F(t):
        y = x + V @ t
        if not p.in_domain(y):
            raise OutsideDomain("chart left the box domain")
        vals = np.empty(len(exprs))
        rows = np.empty((len(exprs), p.d))
        for k, e in enumerate(exprs):
            vals[k], rows[k] = eval_gradient(e, y)
        return vals, rows @ V

    return F


def _identity_deviation(J0: np.ndarray) -> float:
    if J0.size == 0:
        return 0.0
    return float(np.max(np.abs(J0 - np.eye(J0.shape[0]))))


def _checked_chart(p, x, family, basis: DualBasis):
    F = chart_map(p, x, family, basis.matrix)
    val0, J0 = F(np.zeros(len(family)))
    dev = _identity_deviation(J0)
    if dev > IDENTITY_TOL:
        raise IdentityCheckFailed(f"chart Jacobian at 0 deviates from identity by {dev:.3g}")
    return F, val0, dev


def _inactive_ok(p: ProblemSpec, A: ActiveSet, y: np.ndarray) -> bool:
    """Originally-inactive inequalities must stay strictly satisfied."""
    for j in range(1, p.m + 1):
        if p.n + j not in A and eval_value(p.inequalities[j - 1], y) >= 0.0:
            return False
    return True


@dataclass(frozen=True)
class DescentWitness:
    nu: float            # drop actually achieved (<= requested after halvings)
    requested_nu: float
    x_nu: np.ndarray
    t_nu: np.ndarray     # coordinates in the dual basis, objective first
    objective_drop: float
    max_constraint_violation: float  # over the active family
    newton_iters: int
    jacobian_deviation: float
    family: tuple[int, ...]
    basis: np.ndarray


def descent_witness(p: ProblemSpec, x, A: ActiveSet, nu: float,
                    cfg: NewtonConfig = NewtonConfig(),
                    tol: Tolerances = Tolerances()) -> DescentWitness:
    """Feasible point near ``x`` with objective exactly ``nu`` lower.

    Requires grad f_0 to be independent of the active gradients; otherwise
    raises :class:`DependentFamily`. ``nu`` is halved (up to
    ``cfg.max_shrinks`` times) while Newton fails or an inactive inequality
    would be violated.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    x = check_point(p, x)
    family = (0,) + tuple(A.indices)
    G = gradient_rows(p, x, family)
    if not rank_with_tolerance(G, tol.rank).independent:
        raise DependentFamily("objective gradient is in the span of the active gradients")
    basis = dual_basis(G, tol.rank)
    F, val0, dev = _checked_chart(p, x, family, basis)
    f0x = val0[0]

    requested = nu
    for _ in range(cfg.max_shrinks + 1):
        target = np.zeros(len(family))
        target[0] = f0x - nu
        try:
            res = newton_inverse(F, target, cfg)
        except (NoConvergence, JacobianSingular):
            nu /= 2.0
            continue
        y = x + basis.matrix @ res.t
        try:
            ok = _inactive_ok(p, A, y)
        except DomainError:
            ok = False
        if not ok:
            nu /= 2.0
            continue
        active_vals = np.array([eval_value(p.constraint(i), y) for i in A.indices])
        return DescentWitness(
            nu=nu, requested_nu=requested, x_nu=y, t_nu=res.t,
            objective_drop=f0x - eval_value(p.objective, y),
            max_constraint_violation=float(np.max(np.abs(active_vals))) if active_vals.size else 0.0,
            newton_iters=res.iterations, jacobian_deviation=dev, family=family,
            basis=basis.matrix)
    raise NoConvergence(f"no descent point found down to nu = {nu:.3g}")


@dataclass(frozen=True)
class Curve:
    j0: int                    # relaxed inequality (1-based), constraint index n + j0
    base_point: np.ndarray
    epsilons: tuple[float, ...]
    points: np.ndarray         # one row per epsilon
    objective_values: np.ndarray
    w_j0: np.ndarray
    slope_estimate: float | None  # forward difference at the smallest positive epsilon
    newton_iters: tuple[int, ...]
    jacobian_deviation: float
    max_deviation: float       # worst |f_{n+j0} + eps| or |f_i| over the samples


def constraint_curve(p: ProblemSpec, x, A: ActiveSet, j0: int, epsilons: Sequence[float],
                     cfg: NewtonConfig = NewtonConfig(),
                     tol: Tolerances = Tolerances()) -> Curve:
    """Sample the curve on which inequality ``j0`` equals ``-eps`` and every other
    active constraint stays at 0."""
    x = check_point(p, x)
    i0 = p.n + j0
    if not 1 <= j0 <= p.m or i0 not in A:
        raise PreconditionError(f"inequality {j0} is not active at the point")
    G = gradient_rows(p, x, A.indices)
    try:
        basis = dual_basis(G, tol.rank)
    except RankDeficient as err:
        raise LicqFailure(str(err)) from None
    F, _, dev = _checked_chart(p, x, A.indices, basis)
    pos = A.position(i0)

    eps_list = tuple(float(e) for e in epsilons)
    points, iters = [], []
    worst = 0.0
    for eps in eps_list:
        target = np.zeros(len(A))
        target[pos] = -eps
        res = newton_inverse(F, target, cfg)
        y = x + basis.matrix @ res.t
        vals = np.array([eval_value(p.constraint(i), y) for i in A.indices])
        worst = max(worst, float(np.max(np.abs(vals - target))))
        points.append(y)
        iters.append(res.iterations)

    points_arr = np.array(points).reshape(len(points), p.d)
    f0_vals = np.array([eval_value(p.objective, y) for y in points_arr])
    positive = [k for k, e in enumerate(eps_list) if e > 0]
    slope = None
    if positive:
        k = min(positive, key=lambda k: eps_list[k])
        slope = (f0_vals[k] - eval_value(p.objective, x)) / eps_list[k]
    return Curve(j0=j0, base_point=x, epsilons=eps_list, points=points_arr,
                 objective_values=f0_vals, w_j0=basis[pos].copy(), slope_estimate=slope,
                 newton_iters=tuple(iters), jacobian_deviation=dev, max_deviation=worst)


class SlopeEstimate(NamedTuple):
    finite_difference: float  # (f_0(x(eps)) - f_0(x)) / eps at the smallest eps > 0
    analytic: float           # -f_0'(x) . w_j0


def directional_slope(p: ProblemSpec, curve: Curve) -> SlopeEstimate:
    """Objective slope along the curve at eps = 0, two ways.

    Both estimate mu_{j0}; a negative value means moving into the feasible
    interior lowers the objective.
    """
    eps = curve.epsilons
    if 0.0 not in eps or not any(e > 0 for e in eps):
        raise PreconditionError("curve must contain eps = 0 and some eps > 0")
    f_at_zero = curve.objective_values[eps.index(0.0)]
    k = min((k for k, e in enumerate(eps) if e > 0), key=lambda k: eps[k])
    fd = (curve.objective_values[k] - f_at_zero) / eps[k]
    _, g0 = eval_gradient(p.objective, curve.base_point)
    return SlopeEstimate(float(fd), float(-g0 @ curve.w_j0))


@dataclass(frozen=True)
class SignWitness:
    j0: int
    mu: float
    epsilon: float
    x_prime: np.ndarray
    objective_drop: float
    max_constraint_violation: float
    newton_iters: int


def sign_witness(p: ProblemSpec, x, A: ActiveSet, j0: int,
                 cfg: NewtonConfig = NewtonConfig(), tol: Tolerances = Tolerances(),
                 eps0: float = 1e-2) -> SignWitness:
    """Feasible point with lower objective, found by relaxing an inequality whose
    multiplier is negative.

    Refuses (:class:`PreconditionError`) unless ``mu_{j0} < -tol.sign``.
    The step ``eps`` starts at ``eps0`` and is halved until the point is
    feasible and the objective drops by at least ``|mu_{j0}| * eps / 4``.
    """
    x = check_point(p, x)
    mult, _ = solve_multipliers(p, x, A, tol.rank)
    if not 1 <= j0 <= p.m:
        raise PreconditionError(f"no inequality {j0}")
    mu = float(mult.mu[j0 - 1])
    if not mu < -tol.sign:
        raise PreconditionError(f"mu_{j0} = {mu:.6g} is not negative; no sign witness")
    f0x = eval_value(p.objective, x)

    eps = eps0
    while eps >= MIN_EPSILON:
        try:
            curve = constraint_curve(p, x, A, j0, [eps], cfg, tol)
        except (NoConvergence, JacobianSingular):
            eps /= 2.0
            continue
        y = curve.points[0]
        try:
            ok_domain = p.in_domain(y)
            viol = violation(p, constraint_values(p, y))
            f0y = eval_value(p.objective, y)
        except DomainError:
            eps /= 2.0
            continue
        if ok_domain and viol <= tol.feas and f0y <= f0x - 0.25 * abs(mu) * eps:
            return SignWitness(j0=j0, mu=mu, epsilon=eps, x_prime=y,
                               objective_drop=f0x - f0y, max_constraint_violation=viol,
                               newton_iters=curve.newton_iters[0])
        eps /= 2.0
    raise NoDescentFound(f"no descent along inequality {j0} for eps down to {MIN_EPSILON}")
