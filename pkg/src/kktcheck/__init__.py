"""Certify or refute first-order (KKT) optimality at a candidate point.

Problems are smooth: ``minimize f_0(x)`` subject to ``f_i(x) = 0`` and
``f_j(x) <= 0`` on an optional open box in R^d. Besides the usual
multiplier check, the package builds explicit witnesses of non-minimality
by inverting dual-basis charts with Newton's method.
"""

from .errors import (DependentFamily, DomainError, KktError, LicqFailure, NoConvergence,
                     NoDescentFound, ParseError, PreconditionError, RankDeficient)
from .expr import ProblemSpec, eval_gradient, eval_value, load_problem, parse_expression, parse_problem_file
from .kkt import KktReport, Tolerances, Verdict, active_set, feasibility_check, kkt_report, licq_check, solve_multipliers
from .linalg import DualBasis, RankReport, dual_basis, least_squares_min_norm, rank_with_tolerance
from .oracle import finite_diff_gradient, local_min_probe, project_feasible
from .witness import (NewtonConfig, constraint_curve, descent_witness, directional_slope,
                      newton_inverse, sign_witness)

__version__ = "0.1.0"

__all__ = [
    "DependentFamily", "DomainError", "KktError", "LicqFailure", "NoConvergence",
    "NoDescentFound", "ParseError", "PreconditionError", "RankDeficient", "ProblemSpec",
    "eval_gradient", "eval_value", "load_problem", "parse_expression", "parse_problem_file",
    "KktReport", "Tolerances", "Verdict", "active_set", "feasibility_check", "kkt_report",
    "licq_check", "solve_multipliers", "DualBasis", "RankReport", "dual_basis",
    "least_squares_min_norm", "rank_with_tolerance", "finite_diff_gradient", "local_min_probe",
    "project_feasible", "NewtonConfig", "constraint_curve", "descent_witness",
    "directional_slope", "newton_inverse", "sign_witness",
]
