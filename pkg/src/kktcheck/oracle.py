"""Independent brute-force checks: finite differences and a sampling probe for
local minimality. Nothing here uses dual bases or multipliers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KktError, NoConvergence
from .expr import Expr, ProblemSpec, eval_gradient, eval_value
from .kkt import ActiveSet, Tolerances, active_set, check_point, constraint_values, violation
from .linalg import least_squares_min_norm
from .witness import NewtonConfig

GENERATOR = "Philox4x64-10 (numpy.random.Philox), key = seed * 2**64 + sample_index"
PROJECTION_TOL = 1e-10


def finite_diff_gradient(e: Expr, x, h: float = 1e-6) -> np.ndarray:
    """Central differences (e(x + h e_k) - e(x - h e_k)) / 2h."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (eval_value(e, xp) - eval_value(e, xm)) / (2.0 * h)
    return g


def _project(p: ProblemSpec, x0: np.ndarray, indices, cfg: NewtonConfig) -> np.ndarray:
    x = np.array(x0, dtype=float)
    exprs = [p.constraint(i) for i in indices]
    if not exprs:
        return x
    for _ in range(cfg.max_iters + 1):
        vals = np.empty(len(exprs))
        G = np.empty((len(exprs), p.d))
        for k, e in enumerate(exprs):
            vals[k], G[k] = eval_gradient(e, x)
        if np.max(np.abs(vals)) <= PROJECTION_TOL:
            return x
        x = x - least_squares_min_norm(G, vals)
    raise NoConvergence("Gauss-Newton projection did not converge")


def project_feasible(p: ProblemSpec, x0, A: ActiveSet,
                     cfg: NewtonConfig = NewtonConfig()) -> np.ndarray:
    """Gauss-Newton projection x <- x - G^+ F(x) onto {f_i = 0, i in A}."""
    x0 = np.asarray(x0, dtype=float)
    return _project(p, x0, A.indices, cfg)


@dataclass(frozen=True)
class ProbeResult:
    samples_tested: int
    feasible_samples: int
    counterexample: tuple[tuple[float, ...], float] | None
    best_feasible_value: float | None
    reference_value: float
    radius: float
    seed: int
    tol_probe: float
    generator: str = GENERATOR

    @property
    def found(self) -> bool:
        return self.counterexample is not None


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, sample index), so evaluation order is irrelevant."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def _ball_sample(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal(d)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return np.zeros(d)
    return direction / norm * radius * rng.random() ** (1.0 / d)


def _probe_one(p, x, A, radius, index, seed, cfg, tol) -> tuple[np.ndarray, float] | None:
    """Sample, then project onto the equalities plus whichever active inequalities
    the sample violates (repeating while new ones become violated). Inactive
    inequalities are accept/reject only. None if the result is infeasible."""
    y = x + _ball_sample(sample_rng(seed, index), p.d, radius)
    held = set(range(1, p.n + 1))
    candidates = [i for i in A.indices if i > p.n]
    try:
        for _ in range(len(candidates) + 1):
            y = _project(p, y, sorted(held), cfg)
            if not p.in_domain(y):
                return None
            vals = constraint_values(p, y)
            newly = {i for i in candidates if vals[i - 1] > 0.0 and i not in held}
            if not newly:
                break
            held |= newly
        if violation(p, vals) > tol.feas:
            return None
        return y, eval_value(p.objective, y)
    except (KktError, np.linalg.LinAlgError):
        return None


def local_min_probe(p: ProblemSpec, x, radius: float, samples: int, seed: int,
                    tol_probe: float | None = None, tol: Tolerances = Tolerances(),
                    cfg: NewtonConfig = NewtonConfig()) -> ProbeResult:
    """Look for a feasible point within ``radius`` of ``x`` with a lower objective.

    Finding none is evidence, not proof, of local minimality.
    """
    x = check_point(p, x)
    A = active_set(p, x, tol.active)
    f0x = eval_value(p.objective, x)
    if tol_probe is None:
        tol_probe = 1e-10 * (1.0 + abs(f0x))
    best = None  # (value, index, point); ties keep the lowest index
    feasible = 0
    for i in range(samples):
        hit = _probe_one(p, x, A, radius, i, seed, cfg, tol)
        if hit is None:
            continue
        feasible += 1
        y, fy = hit
        if best is None or fy < best[0]:
            best = (fy, i, y)
    counterexample = None
    if best is not None and best[0] < f0x - tol_probe:
        counterexample = (tuple(float(v) for v in best[2]), float(best[0]))
    return ProbeResult(
        samples_tested=samples, feasible_samples=feasible, counterexample=counterexample,
        best_feasible_value=None if best is None else float(best[0]),
        reference_value=f0x, radius=radius, seed=seed, tol_probe=tol_probe)
