"""Linear finite element matrices and their sign checks.

Global matrices have one row per interior vertex and one column per vertex;
with interior-first ordering the column blocks ``[:, :N_vi]`` and
``[:, N_vi:]`` are the interior and boundary couplings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .conditions import _q_stack, _tensor_stack, metric_angles
from .mesh import ElementGeometry
from .tensor import DEFAULT_QUADRATURE, ElementTensors, element_tensors

__all__ = [
    "SystemMatrices",
    "SteppingMatrices",
    "MatrixCheck",
    "local_stiffness",
    "local_stiffness_metric",
    "local_stiffness_cot",
    "local_mass",
    "assemble",
    "build_stepping",
    "verify_z_matrix",
    "verify_row_sums_nonneg",
    "verify_m_matrix_dense",
    "verify_nonnegative",
    "export_matrix_market",
    "SIGN_TOL",
    "DENSE_CAP",
]

SIGN_TOL = 1e-12
DENSE_CAP = 400


# ----------------------------------------------------------------------
# element matrices


def _squeeze(a, single):
    return a[0] if single else a


def local_stiffness(geometry, tensor):
    """``|K| q_i^T D_K q_j`` for one element or a stack."""
    q, area, _ = _q_stack(geometry)
    t = _tensor_stack(tensor, q.shape[0])
    A = area[:, None, None] * np.einsum("kia,kab,kjb->kij", q, t.matrices, q)
    return _squeeze(A, isinstance(geometry, ElementGeometry))


def local_stiffness_metric(geometry, tensor):
    """Stiffness written with metric heights and metric angle cosines.

    Off-diagonal ``-|K| cos / (h_i h_j)``, diagonal ``|K| / h_i^2``.
    """
    q, area, _ = _q_stack(geometry)
    ma = metric_angles(geometry, tensor)
    h = ma.heights
    A = -area[:, None, None] * ma.cos / (h[:, :, None] * h[:, None, :])
    idx = np.arange(3)
    A[:, idx, idx] = area[:, None] / h ** 2
    return _squeeze(A, isinstance(geometry, ElementGeometry))


def local_stiffness_cot(geometry, tensor):
    """Two-dimensional cotangent form: off-diagonal ``-sqrt(det D_K)/2 cot a``.

    The diagonal follows from the zero row sum.
    """
    q, _, _ = _q_stack(geometry)
    t = _tensor_stack(tensor, q.shape[0])
    sqrt_det = np.sqrt(t.det)
    A = np.zeros((q.shape[0], 3, 3))
    for i, j in ((1, 2), (2, 0), (0, 1)):
        # cot from inner and cross products keeps thin elements accurate
        inner = np.einsum("ka,kab,kb->k", q[:, i], t.matrices, q[:, j])
        cross = np.abs(q[:, i, 0] * q[:, j, 1] - q[:, i, 1] * q[:, j, 0])
        cot = -inner / (sqrt_det * cross)
        A[:, i, j] = A[:, j, i] = -0.5 * sqrt_det * cot
    idx = np.arange(3)
    A[:, idx, idx] = -A.sum(axis=2)
    return _squeeze(A, isinstance(geometry, ElementGeometry))


def local_mass(geometry):
    """Consistent P1 mass matrix: ``|K|/6`` on the diagonal, ``|K|/12`` off it."""
    _, area, _ = _q_stack(geometry)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    M = area[:, None, None] * base
    return _squeeze(M, isinstance(geometry, ElementGeometry))


# ----------------------------------------------------------------------
# global assembly


@dataclass(frozen=True)
class SystemMatrices:
    """Interior rows of the mass and stiffness matrices.

    ``mass`` and ``stiffness`` are CSR of shape ``(N_vi, N_v)``; ``lumped``
    holds the row sums of ``mass``.
    """

    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    lumped: np.ndarray
    n_interior: int
    n_vertices: int
    tensors: ElementTensors


def _scatter(tris, local, n):
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """Assemble mass and stiffness matrices for the interior rows.

    Parameters
    ----------
    mesh : Mesh
        Interior-first vertex ordering is assumed.
    field : tensor field or ElementTensors
    quadrature : str
        Rule used for the element averages of the tensor.
    """
    t = field if isinstance(field, ElementTensors) else element_tensors(mesh, field, quadrature)
    geo = mesh.geometry
    n, nvi = mesh.n_vertices, mesh.interior_count
    A = _scatter(mesh.triangles, local_stiffness(geo, t), n)[:nvi]
    M = _scatter(mesh.triangles, local_mass(geo), n)[:nvi]
    lumped = np.asarray(M.sum(axis=1)).ravel()
    return SystemMatrices(M.tocsr(), A.tocsr(), lumped, nvi, n, t)


@dataclass(frozen=True)
class SteppingMatrices:
    """Square ``N_v x N_v`` matrices of ``B u^{n+1} = C u^n + dt f``."""

    B: sp.csr_matrix
    C: sp.csr_matrix
    theta: float
    dt: float
    lumped: bool


def build_stepping(system, theta, dt, lumped=False):
    """Build the left and right stepping matrices of the theta scheme.

    ``B = [[M11, M12], [0, I]] + theta dt [[A11, A12], [0, 0]]`` and
    ``C = [[M11, M12], [0, 0]] - (1 - theta) dt [[A11, A12], [0, 0]]``.
    The lumped variant replaces ``[M11, M12]`` by ``[diag(m), 0]``.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    nvi, n = system.n_interior, system.n_vertices
    if lumped:
        M = sp.csr_matrix((system.lumped, (np.arange(nvi), np.arange(nvi))), shape=(nvi, n))
    else:
        M = system.mass
    A = system.stiffness
    zero = sp.csr_matrix((n - nvi, n))
    eye_b = sp.hstack([sp.csr_matrix((n - nvi, nvi)), sp.identity(n - nvi, format="csr")])
    B = sp.vstack([M + (theta * dt) * A, eye_b], format="csr")
    C = sp.vstack([M - ((1.0 - theta) * dt) * A, zero], format="csr")
    for m in (B, C):
        m.sum_duplicates()
        m.sort_indices()
    return SteppingMatrices(B, C, float(theta), float(dt), bool(lumped))


# ----------------------------------------------------------------------
# sign checks


@dataclass(frozen=True)
class MatrixCheck:
    """Result of a sign check; ``worst`` is the most offending value."""

    name: str
    ok: bool
    worst: float
    location: tuple
    tolerance: float
    count: int = 0

    def __bool__(self):
        return self.ok


def _tol(matrix):
    m = abs(matrix).max() if sp.issparse(matrix) else np.abs(matrix).max(initial=0.0)
    return SIGN_TOL * float(m)


def verify_z_matrix(matrix):
    """Positive diagonal and off-diagonal entries ``<= tol``."""
    S = sp.coo_matrix(matrix)
    tol = _tol(S)
    off = S.row != S.col
    diag = np.asarray(sp.csr_matrix(matrix).diagonal())
    vals = S.data[off]
    bad = vals > tol
    nd = np.flatnonzero(diag <= 0)
    count = int(bad.sum()) + nd.size
    if nd.size:
        i = int(nd[0])
        return MatrixCheck("z-matrix", False, float(diag[i]), (i, i), tol, count)
    if vals.size == 0:
        return MatrixCheck("z-matrix", True, 0.0, (), tol, 0)
    k = int(np.argmax(vals))
    loc = (int(S.row[off][k]), int(S.col[off][k]))
    return MatrixCheck("z-matrix", not bad.any(), float(vals[k]), loc, tol, count)


def verify_row_sums_nonneg(matrix):
    tol = _tol(matrix)
    s = np.asarray(matrix.sum(axis=1)).ravel()
    i = int(np.argmin(s))
    return MatrixCheck("row-sums", bool(s[i] >= -tol), float(s[i]), (i,), tol,
                       int(np.count_nonzero(s < -tol)))


def verify_nonnegative(matrix):
    """All entries ``>= -tol``."""
    S = sp.coo_matrix(matrix)
    tol = _tol(S)
    if S.nnz == 0:
        return MatrixCheck("nonnegative", True, 0.0, (), tol, 0)
    k = int(np.argmin(S.data))
    return MatrixCheck("nonnegative", bool(S.data[k] >= -tol), float(S.data[k]),
                       (int(S.row[k]), int(S.col[k])), tol, int(np.count_nonzero(S.data < -tol)))


def verify_m_matrix_dense(matrix, cap=DENSE_CAP):
    """Z-matrix with an entrywise nonnegative inverse (dense, small matrices only)."""
    n = matrix.shape[0]
    if n > cap:
        raise ValueError(f"matrix of size {n} exceeds the dense cap {cap}; "
                         "use verify_z_matrix and verify_row_sums_nonneg instead")
    z = verify_z_matrix(matrix)
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, float)
    inv = np.linalg.inv(dense)
    tol = SIGN_TOL * float(np.abs(inv).max())
    i, j = np.unravel_index(np.argmin(inv), inv.shape)
    ok = bool(z.ok and inv[i, j] >= -tol)
    worst = z.worst if not z.ok else float(inv[i, j])
    return MatrixCheck("m-matrix", ok, worst, (int(i), int(j)), tol,
                       z.count + int(np.count_nonzero(inv < -tol)))


def export_matrix_market(matrix, path, comment=""):
    """Write a sparse matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
