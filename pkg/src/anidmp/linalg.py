"""Sparse products and a factor-once, solve-many direct solver (SuperLU)."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["FactorizationError", "Factorization", "spmv", "factorize", "solve", "relative_residual"]


class FactorizationError(RuntimeError):
    """Singular or structurally deficient matrix."""


def spmv(matrix, vector):
    """``matrix @ vector`` with a dimension check."""
    v = np.asarray(vector, dtype=float)
    if matrix.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {matrix.shape} and vector {v.shape}")
    return np.asarray(matrix @ v).ravel() if v.ndim == 1 else np.asarray(matrix @ v)


class Factorization:
    """LU factors of a square sparse matrix.

    The column ordering is fixed (COLAMD) so repeated factorizations of the
    same matrix give bitwise-identical solves.
    """

    def __init__(self, matrix):
        A = sp.csc_matrix(matrix, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise FactorizationError(f"matrix is not square: {A.shape}")
        self.shape = A.shape
        try:
            self._lu = spla.splu(A, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise FactorizationError(f"factorization failed: {exc}") from None
        d = self._lu.U.diagonal()
        if not np.all(np.isfinite(d)) or np.any(d == 0):
            raise FactorizationError("matrix is singular")

    def solve(self, rhs):
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs length {b.shape[0]} does not match matrix size {self.shape[0]}")
        return self._lu.solve(b)


def factorize(matrix):
    return Factorization(matrix)


def solve(factorization, rhs):
    return factorization.solve(rhs)


def relative_residual(matrix, x, rhs):
    """``|A x - b|_inf / |b|_inf`` (absolute when ``b = 0``)."""
    r = spmv(matrix, x) - rhs
    nb = np.abs(rhs).max(initial=0.0)
    return float(np.abs(r).max(initial=0.0) / (nb if nb > 0 else 1.0))
