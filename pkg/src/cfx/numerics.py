"""Dense linear algebra helpers.

Matrices are plain ``numpy.ndarray`` objects; the helpers here add the
validation and the error types the solvers rely on.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotPositiveDefinite, ValidationError

SYM_TOL = 1e-10


def as_matrix(entries, rows=None, cols=None):
    """Build a finite 2-D float array, optionally from row-major flat entries."""
    m = np.asarray(entries, dtype=float)
    if rows is not None and cols is not None:
        if m.size != rows * cols:
            raise DimensionMismatch(f"expected {rows * cols} entries, got {m.size}")
        m = m.reshape(rows, cols)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains NaN or Inf")
    return m


def as_vector(entries, dim=None):
    v = np.asarray(entries, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("vector contains NaN or Inf")
    return v


def is_symmetric(m, tol=SYM_TOL):
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.T), initial=0.0) <= tol


def symmetrize(m, tol=SYM_TOL):
    if not is_symmetric(m, tol):
        raise ValidationError(f"matrix is not symmetric within {tol}")
    return 0.5 * (m + m.T)


def solve_spd(m, rhs):
    """Solve ``m @ x = rhs`` for symmetric positive-definite ``m`` via Cholesky."""
    m = symmetrize(np.asarray(m, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != m.shape[0]:
        raise DimensionMismatch("right-hand side does not match matrix")
    try:
        low = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    y = np.linalg.solve(low, rhs)
    return np.linalg.solve(low.T, y)


@dataclass(frozen=True)
class SymEigen:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def sym_eigen(m):
    m = symmetrize(np.asarray(m, dtype=float))
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return SymEigen(vals, vecs)


def min_eigenvalue(m):
    return float(sym_eigen(m).eigenvalues[0])


def is_psd(m, floor=-1e-8):
    return min_eigenvalue(m) >= floor
