"""
Dense real linear algebra needed by the least-squares fit.

Matrices and vectors are plain float64 numpy arrays; ``matrix()`` and
``vector()`` are the validating constructors. The least-squares solution is
computed from a Householder QR factorization of P itself instead of the
normal equations (P^T P)^-1 P^T T, which square the condition number.
"""
import logging

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

from mrtime.errors import DimensionMismatch, NonFiniteValue, RankDeficient

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]

# |R[i][i]| below this fraction of max |R[j][j]| means the column is dependent
RANK_TOLERANCE = 1e-10


def matrix(data) -> Matrix:
    """Builds a 2-D float64 matrix, rejecting NaN and infinity."""
    m = np.array(data, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"a matrix needs 2 dimensions, got {m.ndim}")
    if not np.isfinite(m).all():
        raise NonFiniteValue("matrix entries must be finite")
    return m


def vector(data) -> Vector:
    """Builds a 1-D float64 vector, rejecting NaN and infinity."""
    v = np.array(data, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"a vector needs 1 dimension, got {v.ndim}")
    if not np.isfinite(v).all():
        raise NonFiniteValue("vector entries must be finite")
    return v


def transpose(m: Matrix) -> Matrix:
    return np.ascontiguousarray(matrix(m).T)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    a, b = matrix(a), matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def solve_least_squares(p: Matrix, t: Vector, tolerance: float = RANK_TOLERANCE) -> Vector:
    """
    Computes A minimizing ||P A - T||_2.

    Parameters
    ----------
    p : Matrix
        M x K system matrix with M >= K.
    t : Vector
        Observations, length M.
    tolerance : float, optional
        Relative threshold on the diagonal of R below which a column is
        considered linearly dependent on the previous ones.

    Returns
    -------
    Vector
        The least-squares solution, length K.

    Raises
    ------
    DimensionMismatch
        If P and T disagree on M.
    RankDeficient
        If P has fewer rows than columns or a diagonal entry of R is too small;
        the exception names the offending column index.
    """
    p, t = matrix(p), vector(t)
    rows, cols = p.shape
    if rows != t.shape[0]:
        raise DimensionMismatch(f"system has {rows} rows but {t.shape[0]} observations")
    if rows < cols:
        raise RankDeficient(rows)

    q, r = sla.qr(p, mode="economic")
    diagonal = np.abs(np.diag(r))
    largest = diagonal.max(initial=0.0)
    for i, value in enumerate(diagonal):
        if largest == 0.0 or value < tolerance * largest:
            raise RankDeficient(i)
    logger.debug("QR diagonal span %.3e", largest / diagonal.min())

    return sla.solve_triangular(r, q.T @ t, lower=False)


def pseudo_inverse_solve(p: Matrix, t: Vector, tol: float = 1e-12) -> Vector:
    """
    Minimum-norm least-squares solution through the SVD pseudo-inverse.

    Singular values below ``tol`` times the largest one are treated as zero,
    so this never fails on rank-deficient systems.
    """
    p, t = matrix(p), vector(t)
    if p.shape[0] != t.shape[0]:
        raise DimensionMismatch(f"system has {p.shape[0]} rows but {t.shape[0]} observations")
    return sla.pinv(p, atol=0.0, rtol=tol) @ t
