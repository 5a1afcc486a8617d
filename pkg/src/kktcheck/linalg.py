"""Small dense linear algebra: numerical rank, min-norm least squares, dual bases.

Rows of a matrix are linear functionals (gradients f_i'(x)); a *dual basis*
(quasi-primal basis) for k independent rows is a set of k vectors v_j with
``T[i] @ v[j] == delta_ij``. We pick the minimum-norm one, i.e. the columns
of ``T^T (T T^T)^{-1}``, computed through a QR factorization of ``T^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficient

DEFAULT_RANK_TOL = 1e-10


def as_matrix(M, d: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-d float array; an empty row list needs ``d``."""
    A = np.asarray(M, dtype=float)
    if A.size == 0 and A.ndim < 2:
        if d is None:
            raise ValueError("empty matrix needs an explicit column count")
        A = A.reshape(0, d)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


@dataclass(frozen=True)
class RankReport:
    numerical_rank: int
    singular_values: tuple[float, ...]
    tolerance_used: float  # relative to the largest singular value
    rows: int

    @property
    def independent(self) -> bool:
        return self.numerical_rank == self.rows


def rank_with_tolerance(M, tol: float = DEFAULT_RANK_TOL) -> RankReport:
    """Count singular values above ``tol * sigma_max``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = as_matrix(M, d=1)
    k = A.shape[0]
    if A.size == 0:
        return RankReport(0, (), tol, k)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > tol * s[0]))
    return RankReport(rank, tuple(float(v) for v in s), tol, k)


def least_squares_min_norm(A, b) -> np.ndarray:
    """Minimum-Euclidean-norm minimizer of ||A x - b||."""
    b = np.asarray(b, dtype=float).reshape(-1)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix (use shape (0, d) for no rows)")
    A = as_matrix(A)
    if A.shape[0] != b.size:
        raise ValueError(f"A has {A.shape[0]} rows but b has length {b.size}")
    if A.shape[0] == 0 or not np.any(A):
        return np.zeros(A.shape[1])
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x


@dataclass(frozen=True)
class DualBasis:
    """Columns ``matrix[:, j]`` satisfy ``T[i] @ matrix[:, j] == delta_ij``."""

    matrix: np.ndarray  # d x k

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, j].copy() for j in range(self.matrix.shape[1])]

    def __len__(self):
        return self.matrix.shape[1]

    def __getitem__(self, j) -> np.ndarray:
        return self.matrix[:, j]

    def pairing_error(self, T) -> float:
        """max_ij |T_i . v_j - delta_ij|"""
        T = as_matrix(T, d=self.matrix.shape[0])
        k = T.shape[0]
        if k == 0:
            return 0.0
        return float(np.max(np.abs(T @ self.matrix - np.eye(k))))


def dual_basis(T, tol: float = DEFAULT_RANK_TOL) -> DualBasis:
    """Minimum-norm dual basis of the rows of ``T`` (k x d, full row rank).

    Raises :class:`RankDeficient` when the rows are numerically dependent,
    since no family with ``T v_j = e_j`` exists then.
    """
    T = as_matrix(T)
    k, d = T.shape
    if k == 0:
        return DualBasis(np.zeros((d, 0)))
    report = rank_with_tolerance(T, tol)
    if not report.independent:
        raise RankDeficient(
            f"rows are linearly dependent: numerical rank {report.numerical_rank} < {k}")
    # T^T = Q R  =>  T = R^T Q^T, and v_j = Q R^{-T} e_j solves T v_j = e_j inside row(T)
    Q, R = np.linalg.qr(T.T, mode="reduced")
    V = Q @ solve_triangular(R, np.eye(k), trans="T", lower=False)
    return DualBasis(V)
