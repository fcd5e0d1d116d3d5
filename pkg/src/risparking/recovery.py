"""Sparse recovery of the difference image by subspace pursuit."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import qr_multiply, solve_triangular

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SpConfig:
    """Subspace pursuit settings.

    ``residual_tolerance`` is relative to ``||delta_y||``. ``normalize``
    ranks correlations by ``|a_q^H r| / ||a_q||`` instead of ``|a_q^H r|``.
    """

    sparsity: int
    max_iterations: int = 50
    residual_tolerance: float = 1e-12
    normalize: bool = True

    def validate(self, n_rows: int, n_cols: int) -> None:
        if not 1 <= self.sparsity <= min(n_rows, n_cols):
            raise ValueError(f"sparsity {self.sparsity} outside 1..{min(n_rows, n_cols)}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass(frozen=True)
class DifferenceImage:
    delta_sigma_hat: np.ndarray
    support: frozenset[int]
    residual_norm: float
    iterations: int


def _lstsq(M: np.ndarray, y: np.ndarray) -> np.ndarray:
    # column-pivoted QR; its R diagonal reveals the numerical rank
    qhy, R, perm = qr_multiply(M, y.conj(), mode="right", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size and diag[-1] > RANK_RTOL * diag[0] and M.shape[0] >= M.shape[1]:
        x = np.empty(M.shape[1], dtype=R.dtype)
        x[perm] = solve_triangular(R, qhy.conj())
        return x
    # rank deficient: the SVD route gives the minimum-norm solution
    return np.linalg.lstsq(M, y, rcond=RANK_RTOL)[0]


def least_squares_on_support(A, y, support) -> np.ndarray:
    """Minimum-norm least-squares coefficients restricted to ``support``.

    Returns a length-``Q`` vector that is zero off the support.
    """
    A = getattr(A, "entries", A)
    y = np.asarray(y)
    x = np.zeros(A.shape[1], dtype=np.result_type(A, y, np.complex128))
    support = np.asarray(sorted(support), dtype=int)
    if support.size == 0:
        return x
    if support[0] < 0 or support[-1] >= A.shape[1]:
        raise IndexError("support index out of range")
    x[support] = _lstsq(A[:, support].astype(x.dtype), y.astype(x.dtype))
    return x


def _largest(values: np.ndarray, count: int) -> np.ndarray:
    # stable sort on the negated values breaks ties toward the lowest index
    return np.sort(np.argsort(-values, kind="stable")[:count])


def sp_recover(A, delta_y, cfg: SpConfig) -> DifferenceImage:
    """Subspace pursuit for complex data.

    Starts from the ``s`` columns best correlated with the data, then
    repeatedly merges in the ``s`` columns best correlated with the residual,
    fits on the merged set, keeps the ``s`` largest coefficients and refits.
    Stops once an iteration fails to reduce the residual, the residual drops
    below tolerance, or ``max_iterations`` is reached.
    """
    A = getattr(A, "entries", A)
    y = np.asarray(delta_y)
    n_rows, n_cols = A.shape
    if y.shape != (n_rows,):
        raise ValueError(f"measurement of shape {y.shape} does not match matrix {A.shape}")
    cfg.validate(n_rows, n_cols)
    s = cfg.sparsity

    y_norm = float(np.linalg.norm(y))
    if y_norm == 0:
        return DifferenceImage(np.zeros(n_cols, dtype=complex), frozenset(), 0.0, 0)
    tol = cfg.residual_tolerance * y_norm

    col_norms = np.linalg.norm(A, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("sensing matrix has an all-zero column")
    scale = 1.0 / col_norms if cfg.normalize else np.ones(n_cols)
    AH = A.conj().T

    def correlate(r):
        return np.abs(AH @ r) * scale

    support = _largest(correlate(y), s)
    x = least_squares_on_support(A, y, support)
    r = y - A @ x
    r_norm = float(np.linalg.norm(r))

    iterations = 0
    while iterations < cfg.max_iterations and r_norm > tol:
        merged = np.union1d(support, _largest(correlate(r), s))
        x_merged = least_squares_on_support(A, y, merged)
        candidate = _largest(np.abs(x_merged), s)
        x_new = least_squares_on_support(A, y, candidate)
        r_new = y - A @ x_new
        r_new_norm = float(np.linalg.norm(r_new))
        if r_new_norm >= r_norm:
            break
        support, x, r, r_norm = candidate, x_new, r_new, r_new_norm
        iterations += 1

    return DifferenceImage(x, frozenset(int(q) for q in support), r_norm, iterations)


def exhaustive_recover(A, y, sparsity: int) -> DifferenceImage:
    """Best ``sparsity``-term fit over every support; only for tiny problems."""
    A = getattr(A, "entries", A)
    y = np.asarray(y)
    best = None
    for support in combinations(range(A.shape[1]), sparsity):
        x = least_squares_on_support(A, y, support)
        res = float(np.linalg.norm(y - A @ x))
        if best is None or res < best.residual_norm:
            best = DifferenceImage(x, frozenset(support), res, 0)
    return best
