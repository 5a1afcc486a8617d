"""Command line front end.

Exit codes: 0 KKT satisfied / operation succeeded, 1 condition falsified
(verdict not satisfied, or a witness of non-minimality found), 2 usage or
parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import DomainError, KktError, NumericalError, DependentFamily, NoConvergence
from .expr import ProblemSpec, load_problem
from .kkt import KktReport, Tolerances, Verdict, active_set, feasibility_check, kkt_report
from .oracle import local_min_probe
from .witness import NewtonConfig, constraint_curve, descent_witness, directional_slope, sign_witness

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
SLOPE_TOL = 1e-6


class UsageError(Exception):
    pass


def _reals(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected finite reals, got {text!r}")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file")
    common.add_argument("--point", type=_reals, help="candidate point, e.g. --point=-1,-1")
    common.add_argument("--tol-active", type=_positive, default=1e-8)
    common.add_argument("--tol-feas", type=_positive, default=1e-8)
    common.add_argument("--tol-rank", type=_positive, default=1e-10)
    common.add_argument("--tol-stat", type=_positive, default=None,
                        help="absolute stationarity tolerance (default 1e-8 * (1 + |grad f0|))")
    common.add_argument("--tol-sign", type=_positive, default=1e-8)
    common.add_argument("--format", choices=("text", "structured", "json"), default="text")

    parser = argparse.ArgumentParser(
        prog="kktcheck", description="Certify or refute KKT conditions at a candidate point.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="KKT report")
    w = sub.add_parser("witness", parents=[common], help="construct a witness of non-minimality")
    w.add_argument("--nu", type=_positive, default=1e-3)
    w.add_argument("--j0", type=int)
    c = sub.add_parser("curve", parents=[common], help="sample a constraint-relaxation curve")
    c.add_argument("--j0", type=int)
    c.add_argument("--eps", type=_reals, default=[0.0, 1e-5, 1e-4, 1e-3, 1e-2])
    pr = sub.add_parser("probe", parents=[common], help="sampling probe for local minimality")
    pr.add_argument("--radius", type=_positive, default=0.1)
    pr.add_argument("--samples", type=int, default=10_000)
    pr.add_argument("--seed", type=int, default=0)
    return parser


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _num(v: float) -> str:
    return f"{v + 0.0:.6g}"


def _vec(v) -> str:
    return "(" + ", ".join(_num(float(a)) for a in v) + ")"


def _floats(v) -> list[float]:
    return [float(a) + 0.0 for a in v]


def _tolerances_dict(tol: Tolerances) -> dict:
    return {"feas": tol.feas, "active": tol.active, "rank": tol.rank,
            "stat": tol.stat, "sign": tol.sign}


def report_dict(p: ProblemSpec, rep: KktReport) -> dict:
    A = rep.active_set
    mult = rep.multipliers
    return {
        "verdict": str(rep.verdict),
        "failures": [str(f) for f in rep.failures],
        "point": _floats(rep.point),
        "objective_value": rep.objective_value,
        "feasible": rep.feasible,
        "max_violation": rep.max_violation,
        "active_set": None if A is None else list(A.indices),
        "slacks": None if A is None else _floats(A.slacks),
        "licq_rank": None if rep.licq is None else rep.licq.numerical_rank,
        "licq_independent": None if rep.licq is None else rep.licq.independent,
        "singular_values": None if rep.licq is None else _floats(rep.licq.singular_values),
        "lambda": None if mult is None else _floats(mult.lam),
        "mu": None if mult is None else _floats(mult.mu),
        "stationarity_residual": rep.stationarity_residual,
        "tol_stat": rep.tol_stat,
        "sign_violations": [{"j": j, "mu": mu} for j, mu in rep.sign_violations],
        "complementarity": _floats(rep.complementarity),
        "tolerances": _tolerances_dict(rep.tolerances),
    }


def report_text(p: ProblemSpec, rep: KktReport) -> list[str]:
    verdict = "+".join(str(f) for f in rep.failures) or str(rep.verdict)
    lines = [f"verdict: {verdict}", f"point: {_vec(rep.point)}",
             f"objective: {_num(rep.objective_value)}",
             f"feasible: {'yes' if rep.feasible else 'no'} (max violation {_num(rep.max_violation)})"]
    A = rep.active_set
    if A is not None:
        lines.append("active set: {" + ", ".join(str(i) for i in A.indices) + "}")
        for j, s in enumerate(A.slacks, start=1):
            lines.append(f"  slack f_{p.n + j} = {_num(s)}" + (" (active)" if p.n + j in A else ""))
    if rep.licq is not None:
        state = "independent" if rep.licq.independent else "DEPENDENT"
        lines.append(f"LICQ: rank {rep.licq.numerical_rank} of {rep.licq.rows} ({state})")
    if rep.multipliers is not None:
        for i, lam in enumerate(rep.multipliers.lam, start=1):
            lines.append(f"λ_{i} = {_num(lam)}")
        for j, mu in enumerate(rep.multipliers.mu, start=1):
            lines.append(f"μ_{j} = {_num(mu)}")
        lines.append(f"stationarity residual: {_num(rep.stationarity_residual)} "
                     f"(tol {_num(rep.tol_stat)})")
        for j, mu in rep.sign_violations:
            lines.append(f"sign violation: μ_{j} = {_num(mu)} < 0")
        for j, c in enumerate(rep.complementarity, start=1):
            lines.append(f"complementarity μ_{j}·f_{p.n + j} = {_num(c)}")
    return lines


def _emit(doc: dict, lines: list[str], fmt: str) -> None:
    if fmt == "text":
        print("\n".join(lines))
    else:
        print(json.dumps(doc, allow_nan=False))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_check(p, x, tol, args) -> int:
    rep = kkt_report(p, x, tol)
    doc = {"command": "check", **report_dict(p, rep)}
    _emit(doc, report_text(p, rep), args.format)
    return EXIT_OK if rep.satisfied else EXIT_FALSIFIED


def _cmd_witness(p, x, tol, args) -> int:
    rep = kkt_report(p, x, tol)
    doc = {"command": "witness", **report_dict(p, rep)}
    lines = report_text(p, rep)
    cfg = NewtonConfig()
    if rep.verdict is Verdict.INFEASIBLE:
        doc["construction"] = None
        lines.append("point is infeasible; no witness needed")
        _emit(doc, lines, args.format)
        return EXIT_FALSIFIED

    found = None
    if Verdict.STATIONARITY_FAIL in rep.failures:
        try:
            w = descent_witness(p, x, rep.active_set, args.nu, cfg, tol)
        except (DependentFamily, NoConvergence) as err:
            lines.append(f"descent construction failed: {err}")
        else:
            found = "descent"
            doc.update(construction="descent", x_nu=_floats(w.x_nu),
                       objective_drop=w.objective_drop,
                       max_constraint_violation=w.max_constraint_violation,
                       nu=w.nu, requested_nu=w.requested_nu, t_nu=_floats(w.t_nu),
                       newton_iters=w.newton_iters, jacobian_deviation=w.jacobian_deviation)
            lines += ["witness: descent", f"x_nu = {_vec(w.x_nu)}", f"nu = {_num(w.nu)}",
                      f"objective drop = {_num(w.objective_drop)}",
                      f"max constraint violation = {_num(w.max_constraint_violation)}",
                      f"newton iterations = {w.newton_iters}"]
            point = w.x_nu
    if found is None and rep.sign_violations:
        j0 = args.j0 if args.j0 is not None else min(rep.sign_violations, key=lambda s: s[1])[0]
        sw = sign_witness(p, x, rep.active_set, j0, cfg, tol)
        found = "sign"
        doc.update(construction="sign", x_nu=_floats(sw.x_prime),
                   objective_drop=sw.objective_drop,
                   max_constraint_violation=sw.max_constraint_violation,
                   j0=sw.j0, mu_j0=sw.mu, epsilon=sw.epsilon, newton_iters=sw.newton_iters)
        lines += [f"witness: sign (relaxing inequality {sw.j0}, μ_{sw.j0} = {_num(sw.mu)})",
                  f"x' = {_vec(sw.x_prime)}", f"epsilon = {_num(sw.epsilon)}",
                  f"objective drop = {_num(sw.objective_drop)}",
                  f"max constraint violation = {_num(sw.max_constraint_violation)}"]
        point = sw.x_prime
    if found is None:
        doc["construction"] = None
        lines.append("no witness construction applies")
        _emit(doc, lines, args.format)
        return EXIT_OK

    # re-verify through plain evaluation only
    ok, viol = feasibility_check(p, point, tol.feas)
    doc["witness_verified"] = bool(ok)
    lines.append(f"witness re-verified feasible: {'yes' if ok else 'NO'} (violation {_num(viol)})")
    _emit(doc, lines, args.format)
    return EXIT_FALSIFIED if ok else EXIT_NUMERICAL


def _feasible_active(p, x, tol, args, command):
    ok, viol = feasibility_check(p, x, tol.feas)
    if not ok:
        doc = {"command": command, "verdict": str(Verdict.INFEASIBLE), "point": _floats(x),
               "max_violation": viol}
        _emit(doc, [f"verdict: INFEASIBLE (max violation {_num(viol)})"], args.format)
        return None
    return active_set(p, x, tol.active)


def _cmd_curve(p, x, tol, args) -> int:
    A = _feasible_active(p, x, tol, args, "curve")
    if A is None:
        return EXIT_FALSIFIED
    j0 = args.j0
    if j0 is None:
        if not A.active_inequalities:
            raise UsageError("no active inequality at the point; nothing to relax")
        j0 = A.active_inequalities[0]
    curve = constraint_curve(p, x, A, j0, args.eps, NewtonConfig(), tol)
    slope = None
    if 0.0 in curve.epsilons and any(e > 0 for e in curve.epsilons):
        slope = directional_slope(p, curve)
    doc = {"command": "curve", "point": _floats(x), "j0": j0, "w_j0": _floats(curve.w_j0),
           "epsilons": list(curve.epsilons), "points": [_floats(r) for r in curve.points],
           "objective_values": _floats(curve.objective_values),
           "newton_iters": list(curve.newton_iters),
           "jacobian_deviation": curve.jacobian_deviation, "max_deviation": curve.max_deviation,
           "slope_finite_difference": None if slope is None else slope.finite_difference,
           "slope_analytic": None if slope is None else slope.analytic}
    lines = [f"curve relaxing inequality {j0} (constraint f_{p.n + j0})",
             f"w_{j0} = {_vec(curve.w_j0)}"]
    for e, y, f in zip(curve.epsilons, curve.points, curve.objective_values):
        lines.append(f"  eps = {_num(e)}: x = {_vec(y)}, f0 = {_num(f)}")
    if slope is not None:
        lines.append(f"slope (forward difference) = {_num(slope.finite_difference)}")
        lines.append(f"slope (analytic, -f0'·w) = {_num(slope.analytic)}")
    _emit(doc, lines, args.format)
    if slope is not None and slope.finite_difference < -SLOPE_TOL:
        return EXIT_FALSIFIED
    return EXIT_OK


def _cmd_probe(p, x, tol, args) -> int:
    if args.samples < 0:
        raise UsageError("--samples must be >= 0")
    if _feasible_active(p, x, tol, args, "probe") is None:
        return EXIT_FALSIFIED
    res = local_min_probe(p, x, args.radius, args.samples, args.seed, tol=tol)
    ce = res.counterexample
    doc = {"command": "probe", "point": _floats(x), "samples_tested": res.samples_tested,
           "feasible_samples": res.feasible_samples,
           "counterexample": None if ce is None else {"point": list(ce[0]), "value": ce[1]},
           "best_feasible_value": res.best_feasible_value,
           "reference_value": res.reference_value, "radius": res.radius, "seed": res.seed,
           "tol_probe": res.tol_probe, "generator": res.generator}
    lines = [f"probe: {res.samples_tested} samples, {res.feasible_samples} feasible, "
             f"radius {_num(res.radius)}, seed {res.seed}"]
    if ce is None:
        lines.append("no counterexample found")
    else:
        lines.append(f"counterexample: x = {_vec(ce[0])}, f0 = {_num(ce[1])} "
                     f"< {_num(res.reference_value)}")
    _emit(doc, lines, args.format)
    return EXIT_OK if ce is None else EXIT_FALSIFIED


COMMANDS = {"check": _cmd_check, "witness": _cmd_witness, "curve": _cmd_curve,
            "probe": _cmd_probe}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        p = load_problem(args.problem)
        if args.point is not None:
            x = np.array(args.point)
        elif p.point is not None:
            x = np.array(p.point)
        else:
            raise UsageError("no candidate point: add a 'point' line or pass --point")
        tol = Tolerances(feas=args.tol_feas, active=args.tol_active, rank=args.tol_rank,
                         stat=args.tol_stat, sign=args.tol_sign)
        return COMMANDS[args.command](p, x, tol, args)
    except (NumericalError, DomainError) as err:
        print(f"kktcheck: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KktError, UsageError, OSError, ValueError) as err:
        print(f"kktcheck: error: {err}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
