"""First-order (KKT) certification at a candidate point.

Constraint indices follow the problem numbering: ``i = 1..n`` are equalities,
``i = n+1..n+m`` inequalities; inequality ``j`` (1-based) is constraint
``n + j`` and carries multiplier ``mu[j-1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LicqFailure, OutsideDomain
from .expr import ProblemSpec, eval_gradient, eval_value
from .linalg import DEFAULT_RANK_TOL, RankReport, least_squares_min_norm, rank_with_tolerance


class Verdict(str, enum.Enum):
    KKT_SATISFIED = "KKT_SATISFIED"
    STATIONARITY_FAIL = "STATIONARITY_FAIL"
    SIGN_FAIL = "SIGN_FAIL"
    LICQ_FAIL = "LICQ_FAIL"
    INFEASIBLE = "INFEASIBLE"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8
    active: float = 1e-8
    rank: float = DEFAULT_RANK_TOL
    stat: float | None = None  # None: 1e-8 * (1 + ||grad f_0(x)||)
    sign: float = 1e-8

    def stat_for(self, grad_norm: float) -> float:
        return self.stat if self.stat is not None else 1e-8 * (1.0 + grad_norm)


def check_point(p: ProblemSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != p.d:
        raise DimensionMismatch(f"point has {x.size} coordinates, problem has {p.d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    if not p.in_domain(x):
        raise OutsideDomain("point is not strictly inside the box domain")
    return x


def constraint_values(p: ProblemSpec, x) -> np.ndarray:
    """(f_1(x), ..., f_{n+m}(x))"""
    return np.array([eval_value(e, x) for e in p.constraints], dtype=float)


def gradient_rows(p: ProblemSpec, x, indices) -> np.ndarray:
    """Matrix whose rows are f_i'(x) for i in ``indices`` (0 = objective)."""
    rows = [eval_gradient(p.constraint(i), x)[1] for i in indices]
    return np.array(rows, dtype=float).reshape(len(rows), p.d)


def violation(p: ProblemSpec, values) -> float:
    """max(|f_i| for equalities, max(f_i, 0) for inequalities), 0 when unconstrained."""
    values = np.asarray(values, dtype=float)
    parts = [np.abs(values[: p.n]), np.maximum(values[p.n:], 0.0)]
    v = np.concatenate(parts)
    return float(v.max()) if v.size else 0.0


def feasibility_check(p: ProblemSpec, x, tol_feas: float = 1e-8) -> tuple[bool, float]:
    x = check_point(p, x)
    viol = violation(p, constraint_values(p, x))
    return viol <= tol_feas, viol


@dataclass(frozen=True)
class ActiveSet:
    indices: tuple[int, ...]
    tol_active: float
    n: int
    slacks: tuple[float, ...] = ()  # f_{n+j}(x) for every inequality j, for auditing

    @property
    def active_inequalities(self) -> tuple[int, ...]:
        """Active inequality numbers j (1-based, constraint index n + j)."""
        return tuple(i - self.n for i in self.indices if i > self.n)

    def position(self, i: int) -> int:
        return self.indices.index(i)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in self.indices


def active_set(p: ProblemSpec, x, tol_active: float = 1e-8) -> ActiveSet:
    x = check_point(p, x)
    slacks = tuple(eval_value(e, x) for e in p.inequalities)
    idx = list(range(1, p.n + 1))
    idx += [p.n + j for j, s in enumerate(slacks, start=1) if abs(s) <= tol_active]
    return ActiveSet(tuple(idx), tol_active, p.n, slacks)


def licq_check(p: ProblemSpec, x, A: ActiveSet, tol_rank: float = DEFAULT_RANK_TOL) -> RankReport:
    x = check_point(p, x)
    return rank_with_tolerance(gradient_rows(p, x, A.indices), tol_rank)


@dataclass(frozen=True)
class Multipliers:
    lam: np.ndarray = field(compare=False)  # length n
    mu: np.ndarray = field(compare=False)   # length m, exactly 0 for inactive

    def __eq__(self, other):
        if not isinstance(other, Multipliers):
            return NotImplemented
        return np.array_equal(self.lam, other.lam) and np.array_equal(self.mu, other.mu)


def solve_multipliers(p: ProblemSpec, x, A: ActiveSet,
                      tol_rank: float = DEFAULT_RANK_TOL) -> tuple[Multipliers, float]:
    """Least-squares multipliers for grad f_0 + sum_i c_i grad f_i = 0 over the active set.

    Returns the multipliers and the stationarity residual
    ``||grad f_0(x) + G c||_2``.
    """
    x = check_point(p, x)
    G_rows = gradient_rows(p, x, A.indices)
    report = rank_with_tolerance(G_rows, tol_rank)
    if not report.independent:
        raise LicqFailure(
            f"active gradients are dependent (rank {report.numerical_rank} < {len(A)})")
    _, g0 = eval_gradient(p.objective, x)
    c = least_squares_min_norm(G_rows.T, -g0)
    lam = np.zeros(p.n)
    mu = np.zeros(p.m)
    for coef, i in zip(c, A.indices):
        if i <= p.n:
            lam[i - 1] = coef
        else:
            mu[i - p.n - 1] = coef
    residual = float(np.linalg.norm(g0 + G_rows.T @ c))
    return Multipliers(lam, mu), residual


@dataclass(frozen=True)
class KktReport:
    point: tuple[float, ...]
    verdict: Verdict
    failures: tuple[Verdict, ...]
    feasible: bool
    max_violation: float
    tolerances: Tolerances
    objective_value: float
    active_set: ActiveSet | None = None
    licq: RankReport | None = None
    multipliers: Multipliers | None = None
    stationarity_residual: float | None = None
    tol_stat: float | None = None
    sign_violations: tuple[tuple[int, float], ...] = ()
    complementarity: tuple[float, ...] = ()

    @property
    def satisfied(self) -> bool:
        return self.verdict is Verdict.KKT_SATISFIED


def kkt_report(p: ProblemSpec, x=None, tol: Tolerances = Tolerances()) -> KktReport:
    """Check feasibility, LICQ, stationarity, multiplier signs and complementarity at ``x``.

    Verdict precedence: INFEASIBLE > LICQ_FAIL > STATIONARITY_FAIL / SIGN_FAIL
    (both listed in ``failures`` when both occur) > KKT_SATISFIED.
    """
    if x is None:
        if p.point is None:
            raise ValueError("no candidate point given and the problem has none")
        x = p.point
    x = check_point(p, x)
    common = dict(point=tuple(float(v) for v in x), tolerances=tol,
                  objective_value=eval_value(p.objective, x))

    feasible, viol = feasibility_check(p, x, tol.feas)
    if not feasible:
        return KktReport(verdict=Verdict.INFEASIBLE, failures=(Verdict.INFEASIBLE,),
                         feasible=False, max_violation=viol, **common)

    A = active_set(p, x, tol.active)
    licq = licq_check(p, x, A, tol.rank)
    if not licq.independent:
        return KktReport(verdict=Verdict.LICQ_FAIL, failures=(Verdict.LICQ_FAIL,),
                         feasible=True, max_violation=viol, active_set=A, licq=licq, **common)

    mult, residual = solve_multipliers(p, x, A, tol.rank)
    _, g0 = eval_gradient(p.objective, x)
    tol_stat = tol.stat_for(float(np.linalg.norm(g0)))
    sign_violations = tuple((j, float(mu)) for j, mu in enumerate(mult.mu, start=1)
                            if mu < -tol.sign)
    active_ineq = set(A.active_inequalities)
    complementarity = tuple(
        float(mult.mu[j - 1] * A.slacks[j - 1]) if j in active_ineq else 0.0
        for j in range(1, p.m + 1))

    failures = []
    if residual > tol_stat:
        failures.append(Verdict.STATIONARITY_FAIL)
    if sign_violations:
        failures.append(Verdict.SIGN_FAIL)
    verdict = failures[0] if failures else Verdict.KKT_SATISFIED
    return KktReport(
        verdict=verdict, failures=tuple(failures), feasible=True, max_violation=viol,
        active_set=A, licq=licq, multipliers=mult, stationarity_residual=residual,
        tol_stat=tol_stat, sign_violations=sign_violations, complementarity=complementarity,
        **common)
