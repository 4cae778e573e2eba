"""Dense small-matrix kernels used by every other module.

Everything here is a thin, validated layer over LAPACK (through numpy).
Matrices are plain ``numpy.ndarray`` objects; index sets are sorted tuples
of distinct integers.
"""

from __future__ import annotations

import enum
import itertools
from typing import Iterator, Sequence

import numpy as np

from .errors import ShapeError

#: absolute tolerance for rank / zero / strict-inequality tests
DEFAULT_TOL = 1e-9


class Verdict(enum.Enum):
    """Three-valued outcome of a strict inequality evaluated in floating point."""

    TRUE = "true"
    FALSE = "false"
    MARGINAL = "marginal"

    def __bool__(self):
        return self is Verdict.TRUE

    def __str__(self):
        return self.value

    @classmethod
    def less_than(cls, value, bound, tol=DEFAULT_TOL):
        """Verdict for ``value < bound`` with a +-tol band around ``bound``."""
        if value < bound - tol:
            return cls.TRUE
        if value > bound + tol:
            return cls.FALSE
        return cls.MARGINAL

    @classmethod
    def all_of(cls, verdicts):
        verdicts = list(verdicts)
        if any(v is cls.FALSE for v in verdicts):
            return cls.FALSE
        if any(v is cls.MARGINAL for v in verdicts):
            return cls.MARGINAL
        return cls.TRUE


def as_matrix(A, name="A", square=False) -> np.ndarray:
    """Convert to a finite 2D float array, raising ShapeError otherwise."""
    A = np.array(A, dtype=float)
    if A.ndim == 1 and A.size == 1:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be a 2D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ShapeError(f"{name} has non-finite entries")
    return A


def as_index_set(idx, n) -> tuple[int, ...]:
    out = tuple(sorted(int(i) for i in idx))
    if len(set(out)) != len(out):
        raise ShapeError(f"index set {idx} has repeated entries")
    if out and (out[0] < 0 or out[-1] >= n):
        raise ShapeError(f"index set {idx} is not a subset of range({n})")
    return out


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues of a square matrix, with multiplicity."""
    A = as_matrix(A, square=True)
    return np.linalg.eigvals(A)


def spectral_radius(A) -> float:
    A = as_matrix(A, square=True)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def operator_norm(A) -> float:
    """Induced 2-norm (largest singular value)."""
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def excitatory_part(W) -> np.ndarray:
    """``[W]_0^inf``: negative entries replaced by zero."""
    return np.maximum(np.asarray(W, dtype=float), 0.0)


def principal_submatrix(A, idx: Sequence[int]) -> np.ndarray:
    idx = list(idx)
    return np.asarray(A)[np.ix_(idx, idx)]


def principal_pivot_transform(A, pivot_block, tol=DEFAULT_TOL) -> np.ndarray:
    """Principal pivot transform of ``A`` about the index set ``pivot_block``.

    With ``A`` permuted so that the pivot indices form the trailing block,

        pi(A) = [[A11 - A12 A22^-1 A21,  A12 A22^-1],
                 [-A22^-1 A21,           A22^-1    ]]

    and the result is permuted back. The transform is an involution.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the pivot block is singular.
    """
    A = as_matrix(A, square=True)
    n = A.shape[0]
    piv = list(as_index_set(pivot_block, n))
    rest = [i for i in range(n) if i not in piv]
    A22 = A[np.ix_(piv, piv)]
    if piv:
        s = np.linalg.svd(A22, compute_uv=False)
        if s[-1] <= tol * max(1.0, s[0]):
            raise np.linalg.LinAlgError("pivot block is singular")
    A11 = A[np.ix_(rest, rest)]
    A12 = A[np.ix_(rest, piv)]
    A21 = A[np.ix_(piv, rest)]
    A22inv = np.linalg.inv(A22) if piv else np.zeros((0, 0))
    out = np.empty_like(A)
    out[np.ix_(rest, rest)] = A11 - A12 @ A22inv @ A21
    out[np.ix_(rest, piv)] = A12 @ A22inv
    out[np.ix_(piv, rest)] = -A22inv @ A21
    out[np.ix_(piv, piv)] = A22inv
    return out


def least_squares_solve(A, Y) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution of ``A X = Y``.

    Returns ``(X, residual)`` where ``residual = ||A X - Y||_F``. Rank
    deficiency is handled through the SVD, which yields the minimum-norm
    minimiser.
    """
    A = as_matrix(A)
    Y = np.array(Y, dtype=float)
    vector = Y.ndim == 1
    if vector:
        Y = Y[:, None]
    Y = as_matrix(Y, name="Y")
    if A.shape[1] == 0:
        raise ShapeError("A must have at least one column")
    if Y.shape[0] != A.shape[0]:
        raise ShapeError(f"A has {A.shape[0]} rows but Y has {Y.shape[0]}")
    U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    # relative cutoff as in lstsq, plus an absolute floor so subnormal
    # singular values do not overflow the pseudo-inverse
    cutoff = max(np.finfo(float).eps * max(A.shape) * (sv[0] if sv.size else 0.0),
                 np.finfo(float).tiny ** 0.5)
    keep = sv > cutoff
    X = Vt[keep].T @ ((U[:, keep].T @ Y) / sv[keep, None])
    residual = float(np.linalg.norm(A @ X - Y))
    return (X[:, 0] if vector else X), residual


def rank(A, tol=DEFAULT_TOL) -> int:
    A = as_matrix(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def index_sets(n, min_size=1) -> Iterator[tuple[int, ...]]:
    """Nonempty subsets of range(n) ordered by size, then lexicographically."""
    for k in range(min_size, n + 1):
        yield from itertools.combinations(range(n), k)


def stacked_principal_submatrices(A, combos) -> np.ndarray:
    """Stack the principal submatrices of ``A`` for equal-size index sets."""
    idx = np.asarray(combos, dtype=np.intp)
    return A[idx[:, :, None], idx[:, None, :]]
