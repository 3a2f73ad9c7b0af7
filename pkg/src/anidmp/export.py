"""VTK, CSV and plain-text writers."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

__all__ = ["export_vtk", "vtk_string", "write_trace_csv", "format_table", "table_csv",
           "format_sig"]


def _num(v):
    return "%.17g" % v


def vtk_string(mesh, solution, title="anidmp solution"):
    u = np.asarray(solution, dtype=float).ravel()
    if u.shape[0] != mesh.n_vertices:
        raise ValueError(f"solution has {u.shape[0]} values for {mesh.n_vertices} vertices")
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {mesh.n_vertices} double"]
    out += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.coords]
    ne = mesh.n_elements
    out.append(f"CELLS {ne} {4 * ne}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {ne}")
    out += ["5"] * ne
    out += [f"POINT_DATA {mesh.n_vertices}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    out += [_num(v) for v in u]
    return "\n".join(out) + "\n"


def export_vtk(mesh, solution, path, title="anidmp solution"):
    """Write a legacy ASCII VTK unstructured grid with point scalar ``u``."""
    with open(path, "w", newline="\n") as fh:
        fh.write(vtk_string(mesh, solution, title))


def write_trace_csv(result, path):
    """Per-step extrema of a run: columns step, t, u_min, u_max."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "u_min", "u_max"])
        for k, (t, lo, hi) in enumerate(zip(result.times, result.u_min_trace,
                                            result.u_max_trace)):
            w.writerow([k, repr(float(t)), repr(float(lo)), repr(float(hi))])


def format_sig(v, digits=3):
    """Format with ``digits`` significant digits; exact zeros print as ``0``."""
    if v is None:
        return "-"
    if isinstance(v, (int, np.integer)):
        return str(v)
    if v == 0:
        return "0"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    mant, exp = f"{v:.{digits - 1}e}".split("e")
    return f"{mant}e{int(exp)}"


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) or isinstance(v, str):
        return str(v)
    return repr(float(v))


def format_table(rows, columns):
    """Aligned text table; ``rows`` are mappings, ``columns`` the keys to show."""
    cells = [[c for c in columns]]
    for r in rows:
        cells.append([r[c] if isinstance(r[c], str) else format_sig(r[c]) for c in columns])
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(s.rjust(w) for s, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def table_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_value(r[c]) for c in columns])
    return buf.getvalue()
