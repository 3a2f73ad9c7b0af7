"""Built-in benchmark problems on the holed unit square and table drivers."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .conditions import dt_bounds_ani, dt_bounds_del
from .integrator import TransientProblem, run
from .mesh import INNER, OUTER, generate_mesh45, generate_mesh135
from .tensor import BUILTIN_FIELDS, DEFAULT_QUADRATURE, element_tensors

__all__ = [
    "RAMP_KINDS",
    "u0_ramp",
    "example_boundary",
    "example_problem",
    "TableRow",
    "TABLE_LAYOUTS",
    "reproduce_table",
    "NeedsImportedMesh",
]

HOLE_HALF = 0.1      # half-width of the hole around (0.5, 0.5)
RAMP_OUTER = 0.3     # level set where the initial ramp reaches 0
INNER_VALUE = 4.0

RAMP_KINDS = ("radial", "square")


def u0_ramp(x, y, kind="radial"):
    """Initial state: 4 on the hole boundary, 0 outside ``[0.2, 0.8]^2``.

    ``kind="radial"`` (default) ramps linearly along each ray from the centre,
    from the hole boundary (value 4) to the circle of radius 0.3 (value 0).
    ``kind="square"`` ramps linearly in the max-norm distance ``s`` from 4 at
    ``s = 0.1`` to 0 at ``s = 0.3``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx, dy = x - 0.5, y - 0.5
    s = np.maximum(np.abs(dx), np.abs(dy))
    if kind == "square":
        val = INNER_VALUE * (RAMP_OUTER - s) / (RAMP_OUTER - HOLE_HALF)
    elif kind == "radial":
        r = np.hypot(dx, dy)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_in = np.where(s > 0, HOLE_HALF * r / s, HOLE_HALF)
        val = INNER_VALUE * (RAMP_OUTER - r) / (RAMP_OUTER - r_in)
    else:
        raise ValueError(f"unknown ramp kind {kind!r}; expected one of {RAMP_KINDS}")
    out = np.clip(val, 0.0, INNER_VALUE)
    return out if out.ndim else float(out)


def example_boundary():
    """Dirichlet data of the benchmark: 0 on the outer square, 4 on the hole."""
    return {OUTER: 0.0, INNER: INNER_VALUE}


def example_problem(example, mesh, theta=1.0, dt=1e-4, n_steps=10, lumped=False,
                    ramp="radial", quadrature=DEFAULT_QUADRATURE, keep_solutions=False):
    """Benchmark problem with one of the built-in tensor fields."""
    field = BUILTIN_FIELDS[example] if isinstance(example, str) else example
    return TransientProblem(mesh, field, theta=theta, dt=dt, n_steps=n_steps,
                            initial=lambda x, y: u0_ramp(x, y, ramp),
                            boundary=example_boundary(), lumped=lumped,
                            quadrature=quadrature, keep_solutions=keep_solutions)


# ----------------------------------------------------------------------
# tables


class NeedsImportedMesh(ValueError):
    """Rows that need a user-supplied mesh were requested without one."""


@dataclass(frozen=True)
class TableRow:
    mesh: str
    h: float
    n_elements: int
    dt_ani: float
    dt_del: float
    dt: float
    u_min: float
    u_min_lumped: float | None = None

    def to_dict(self):
        return asdict(self)


# (generator, n, dt) per row; n = 1/h
TABLE_LAYOUTS = {
    "1": ("example1", [("mesh45", n, 1.5e-4) for n in (20, 40, 80, 160, 320)]
          + [("mesh45", 40, 1.5e-4), ("mesh45", 40, 1.0e-4), ("mesh45", 40, 5.0e-5),
             ("mesh45", 80, 1.5e-4), ("mesh45", 80, 1.0e-5)], False),
    "2": ("example1", [("mesh135", 20, 1.5e-4), ("mesh135", 40, 1.5e-4),
                       ("mesh135", 80, 1.5e-4), ("mesh135", 80, 1.0e-7),
                       ("mesh135", 160, 5.0e-4), ("mesh135", 160, 1.5e-5),
                       ("mesh135", 160, 1.5e-6)], False),
    "3-mesh45": ("example2", [("mesh45", 40, dt) for dt in (1.0e-4, 5.0e-5, 2.0e-5, 1.0e-5)],
                 True),
}
TABLE_ALIASES = {"3": "3-mesh45", "table1": "1", "table2": "2"}
IMPORTED_ROW_STEPS = (5.0e-2, 1.0e-4, 5.0e-5, 2.0e-5)

_GENERATORS = {"mesh45": generate_mesh45, "mesh135": generate_mesh135}


def _rows_for_mesh(mesh, field, theta, steps, with_lumped, n_steps, ramp, quadrature, label):
    t = element_tensors(mesh, field, quadrature)
    ani = dt_bounds_ani(mesh, t, theta).lower
    dl = dt_bounds_del(mesh, t, theta).lower
    rows = []
    for dt in steps:
        res = run(example_problem(field, mesh, theta, dt, n_steps, False, ramp, quadrature))
        lumped = None
        if with_lumped:
            lumped = run(example_problem(field, mesh, theta, dt, n_steps, True, ramp,
                                         quadrature)).u_min
        rows.append(TableRow(label, mesh.max_height, mesh.n_elements, ani, dl, dt,
                             res.u_min, lumped))
    return rows


def reproduce_table(table_id, theta=1.0, n_steps=10, ramp="radial",
                    quadrature=DEFAULT_QUADRATURE, max_n=None, imported_mesh=None,
                    include_imported=False):
    """Compute the rows of a benchmark table end to end.

    Parameters
    ----------
    table_id : {"1", "2", "3-mesh45", "3-imported"}
    max_n : skip rows on grids finer than ``max_n`` cells per side
    imported_mesh : Mesh used for the ``"3-imported"`` rows
    include_imported : append those rows to ``"3-mesh45"``

    Returns
    -------
    list of TableRow
    """
    tid = TABLE_ALIASES.get(str(table_id), str(table_id))
    want_imported = tid == "3-imported" or include_imported
    if want_imported and imported_mesh is None:
        raise NeedsImportedMesh(
            "rows on metric-adapted meshes need an imported mesh file (--mesh PATH)")
    rows = []
    if tid in TABLE_LAYOUTS:
        example, layout, with_lumped = TABLE_LAYOUTS[tid]
        field = BUILTIN_FIELDS[example]
        meshes = {}
        for gen, n, dt in layout:
            if max_n is not None and n > max_n:
                continue
            key = (gen, n)
            if key not in meshes:
                meshes[key] = _GENERATORS[gen](n)
            rows += _rows_for_mesh(meshes[key], field, theta, [dt], with_lumped, n_steps,
                                   ramp, quadrature, gen)
    elif tid != "3-imported":
        raise ValueError(f"unknown table {table_id!r}; expected 1, 2, 3-mesh45 or 3-imported")
    if want_imported:
        rows += _rows_for_mesh(imported_mesh, BUILTIN_FIELDS["example2"], theta,
                               IMPORTED_ROW_STEPS, True, n_steps, ramp, quadrature,
                               imported_mesh.name)
    return rows
