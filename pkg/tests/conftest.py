import numpy as np
import pytest

from anidmp.mesh import INTERIOR, OUTER, Mesh, boundary_edges

# criterion number -> list of (label, ok, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(criterion, label, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))
    line = f"criterion {criterion} [{label}]: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}")
        for label, pok, detail in parts:
            tr.write_line(f"    {'pass' if pok else 'FAIL'}  {label}: {detail}")


def equilateral_mesh(nx=6, ny=6, e=1.0):
    """Triangular lattice of equilateral triangles with edge ``e``.

    Every vertex on a boundary edge is tagged OUTER.
    """
    hgt = e * np.sqrt(3) / 2
    pts = [(i * e + 0.5 * e * (j % 2), j * hgt) for j in range(ny + 1) for i in range(nx + 1)]
    vid = lambda i, j: j * (nx + 1) + i  # noqa: E731
    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            if j % 2 == 0:
                tris += [(a, b, c), (b, d, c)]
            else:
                tris += [(a, d, c), (a, b, d)]
    tris = np.array(tris)
    groups = np.full(len(pts), INTERIOR)
    groups[np.unique(boundary_edges(Mesh(np.array(pts, float), tris, groups.astype(np.int8))))] = OUTER
    return Mesh.from_arrays(pts, tris, groups, name="equilateral")


@pytest.fixture
def unit_right_triangle():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
