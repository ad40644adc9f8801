"""Small dense linear algebra for q x q information matrices.

Everything goes through a partially pivoted LU factorization.  A matrix is
declared singular when some pivot is smaller than ``PIVOT_RTOL`` times the
largest pivot magnitude.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

PIVOT_RTOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a pivot falls below the relative singularity threshold."""


def lu(m: np.ndarray):
    """Factorize ``m``; raise :class:`SingularMatrixError` on a tiny pivot."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu_piv = sla.lu_factor(m, check_finite=True)
    pivots = np.abs(np.diag(lu_piv[0]))
    scale = pivots.max() if pivots.size else 0.0
    if scale == 0.0 or pivots.min() < PIVOT_RTOL * scale:
        raise SingularMatrixError("matrix is numerically singular")
    return lu_piv


def is_singular(m: np.ndarray) -> bool:
    try:
        lu(m)
    except SingularMatrixError:
        return True
    return False


def det(m: np.ndarray) -> float:
    """Determinant; 0.0 for matrices flagged singular."""
    try:
        lu_mat, piv = lu(m)
    except SingularMatrixError:
        return 0.0
    sign = (-1.0) ** int(np.sum(piv != np.arange(piv.size)))
    return float(sign * np.prod(np.diag(lu_mat)))


def logdet(m: np.ndarray) -> float:
    """Log of |det m|; ``-inf`` when singular."""
    try:
        lu_mat, _ = lu(m)
    except SingularMatrixError:
        return -np.inf
    return float(np.sum(np.log(np.abs(np.diag(lu_mat)))))


def inv(m: np.ndarray) -> np.ndarray:
    lu_piv = lu(m)
    out = sla.lu_solve(lu_piv, np.eye(lu_piv[0].shape[0]))
    return 0.5 * (out + out.T) if np.allclose(m, np.asarray(m).T) else out


def solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    return sla.lu_solve(lu(m), b)
