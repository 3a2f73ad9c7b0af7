import numpy as np
import pytest
import scipy.sparse as sp

from anidmp.assembly import assemble, build_stepping
from anidmp.linalg import FactorizationError, factorize, relative_residual, solve, spmv
from anidmp.mesh import generate_mesh45
from anidmp.tensor import EXAMPLE1


def test_spmv():
    v = np.arange(4.0)
    assert np.array_equal(spmv(sp.identity(4, format="csr"), v), v)
    rng = np.random.default_rng(0)
    D = rng.normal(size=(5, 5))
    D[np.abs(D) < 0.5] = 0
    x = rng.normal(size=5)
    assert np.allclose(spmv(sp.csr_matrix(D), x), D @ x, atol=1e-14)
    with pytest.raises(ValueError):
        spmv(sp.identity(3, format="csr"), v)


def test_c_times_ones_gives_mass_row_sums():
    s = assemble(generate_mesh45(5), EXAMPLE1)
    C = build_stepping(s, 1.0, 1e-3).C
    y = spmv(C, np.ones(s.n_vertices))
    assert np.allclose(y[: s.n_interior], s.lumped, rtol=1e-14)
    assert np.all(y[s.n_interior:] == 0)


def test_small_solves():
    f = factorize(sp.identity(3, format="csr"))
    assert np.array_equal(solve(f, [1.0, 2, 3]), [1, 2, 3])
    f = factorize(sp.csr_matrix([[2.0, 1], [1, 2]]))
    assert np.allclose(f.solve([3.0, 3]), [1, 1], atol=1e-15)


def test_stepping_matrix_residual_and_determinism():
    s = assemble(generate_mesh45(10), EXAMPLE1)
    B = build_stepping(s, 1.0, 1e-4).B
    rng = np.random.default_rng(5)
    x = rng.normal(size=B.shape[0])
    b = B @ x
    y = factorize(B).solve(b)
    assert relative_residual(B, y, b) <= 1e-12
    assert np.abs(y - x).max() <= 1e-10 * np.abs(x).max()
    y2 = factorize(B).solve(b)
    assert np.array_equal(y, y2)


def test_singular_rejected():
    with pytest.raises(FactorizationError):
        factorize(sp.csr_matrix([[1.0, 1], [1, 1]]))
    with pytest.raises(FactorizationError):
        factorize(sp.csr_matrix((2, 2)))
    with pytest.raises(FactorizationError):
        factorize(sp.csr_matrix(np.ones((2, 3))))
