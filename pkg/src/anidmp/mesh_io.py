"""Mesh file formats: the native ``dmpmesh`` text format and a Gmsh MSH 2 subset.

Native layout::

    dmpmesh 1
    <N_v>
    x y            (N_v lines)
    <N_e>
    a b c          (N_e lines, 0-based)
    g              (N_v lines of boundary group codes 0/1/2)
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import HOLE, INNER, INTERIOR, OUTER, Mesh, MeshError, _edge_counts

__all__ = ["MeshParseError", "read_mesh", "write_mesh", "classify_boundary", "FORMATS"]

FORMATS = ("native", "msh")
NATIVE_HEADER = "dmpmesh 1"
BOUNDARY_TOL = 1e-9

# MSH element types that describe lower-dimensional entities and are skipped
_MSH_SKIPPED = {1: "line", 15: "point"}


class MeshParseError(MeshError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line = str(path), line


def _guess_format(path):
    return "msh" if Path(path).suffix.lower() == ".msh" else "native"


class _Lines:
    """Line reader that tracks 1-based line numbers and skips blank lines."""

    def __init__(self, path):
        self.path = path
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.i = 0

    def next(self, what):
        while self.i < len(self.lines):
            self.i += 1
            s = self.lines[self.i - 1].strip()
            if s:
                return s
        raise MeshParseError(self.path, self.i, f"unexpected end of file, expected {what}")

    def error(self, msg):
        return MeshParseError(self.path, self.i, msg)

    def ints(self, what, count=None):
        s = self.next(what)
        try:
            vals = [int(t) for t in s.split()]
        except ValueError:
            raise self.error(f"expected integers for {what}, got {s!r}") from None
        if count is not None and len(vals) != count:
            raise self.error(f"expected {count} integers for {what}, got {len(vals)}")
        return vals

    def floats(self, what, count):
        s = self.next(what)
        parts = s.split()
        if len(parts) < count:
            raise self.error(f"expected {count} numbers for {what}, got {len(parts)}")
        try:
            return [float(t) for t in parts]
        except ValueError:
            raise self.error(f"malformed number in {what}: {s!r}") from None


def classify_boundary(coords, triangles, tol=BOUNDARY_TOL):
    """Assign boundary groups geometrically for the holed unit square.

    Vertices on boundary edges must lie on the outer square (``OUTER``) or on
    the hole ``[0.4, 0.6]^2`` (``INNER``); anything else is an error.
    """
    coords = np.asarray(coords, float)
    groups = np.full(coords.shape[0], INTERIOR, dtype=np.int8)
    edges, counts = _edge_counts(np.asarray(triangles))
    bverts = np.unique(edges[counts == 1])
    x, y = coords[bverts, 0], coords[bverts, 1]
    near = lambda a, b: np.abs(a - b) <= tol  # noqa: E731
    outer = near(x, 0) | near(x, 1) | near(y, 0) | near(y, 1)
    lo, hi = HOLE
    in_x = (x >= lo - tol) & (x <= hi + tol)
    in_y = (y >= lo - tol) & (y <= hi + tol)
    inner = ((near(x, lo) | near(x, hi)) & in_y) | ((near(y, lo) | near(y, hi)) & in_x)
    groups[bverts[inner]] = INNER
    groups[bverts[outer]] = OUTER
    stray = bverts[~(outer | inner)]
    if stray.size:
        v = int(stray[0])
        raise MeshError(f"boundary vertex {v} at ({coords[v, 0]:.6g}, {coords[v, 1]:.6g}) "
                        "is on neither the outer square nor the hole")
    return groups


# ----------------------------------------------------------------------


def _read_native(path):
    r = _Lines(path)
    head = r.next("header")
    if head != NATIVE_HEADER:
        raise r.error(f"bad header {head!r}, expected {NATIVE_HEADER!r}")
    nv, = r.ints("vertex count", 1)
    coords = np.array([r.floats("vertex coordinates", 2)[:2] for _ in range(nv)]).reshape(-1, 2)
    ne, = r.ints("element count", 1)
    tris = []
    for _ in range(ne):
        t = r.ints("triangle", None)
        if len(t) != 3:
            raise r.error(f"element with {len(t)} vertices; only triangles are supported")
        if min(t) < 0 or max(t) >= nv:
            raise r.error(f"dangling vertex index in {t}")
        tris.append(t)
    groups = []
    for _ in range(nv):
        g, = r.ints("boundary group", 1)
        if g not in (INTERIOR, OUTER, INNER):
            raise r.error(f"unknown boundary group {g}")
        groups.append(g)
    return Mesh.from_arrays(coords, np.array(tris, dtype=np.int64).reshape(-1, 3), groups,
                            name=Path(path).stem)


def _read_msh(path):
    r = _Lines(path)
    s = r.next("$MeshFormat")
    if s != "$MeshFormat":
        raise r.error(f"expected $MeshFormat, got {s!r}")
    fmt = r.next("format line").split()
    if not fmt or not fmt[0].startswith("2"):
        raise r.error(f"unsupported MSH version {fmt[0] if fmt else '?'}; need 2.x ASCII")
    if len(fmt) > 1 and fmt[1] != "0":
        raise r.error("binary MSH files are not supported")
    if r.next("$EndMeshFormat") != "$EndMeshFormat":
        raise r.error("expected $EndMeshFormat")

    nodes, tris = None, None
    while True:
        try:
            s = r.next("section")
        except MeshParseError:
            break
        if s == "$Nodes":
            n, = r.ints("node count", 1)
            ids, xy = [], []
            for _ in range(n):
                v = r.floats("node", 4)
                ids.append(int(v[0]))
                xy.append(v[1:3])
            if r.next("$EndNodes") != "$EndNodes":
                raise r.error("expected $EndNodes")
            nodes = (ids, np.array(xy, float).reshape(-1, 2))
        elif s == "$Elements":
            n, = r.ints("element count", 1)
            tris = []
            for _ in range(n):
                v = r.ints("element", None)
                if len(v) < 3:
                    raise r.error("truncated element line")
                etype, ntags = v[1], v[2]
                conn = v[3 + ntags:]
                if etype in _MSH_SKIPPED:
                    continue
                if etype != 2:
                    raise r.error(f"element type {etype} is not supported (triangles only)")
                if len(conn) != 3:
                    raise r.error("triangle needs 3 nodes")
                tris.append((conn, r.i))
            if r.next("$EndElements") != "$EndElements":
                raise r.error("expected $EndElements")
        elif s.startswith("$"):
            # skip unknown sections
            end = "$End" + s[1:]
            while r.next(end) != end:
                pass
        else:
            raise r.error(f"unexpected content {s!r}")
    if nodes is None or tris is None:
        raise MeshParseError(path, r.i, "missing $Nodes or $Elements section")
    ids, xy = nodes
    index = {nid: k for k, nid in enumerate(ids)}
    conn = []
    for c, line in tris:
        try:
            conn.append([index[t] for t in c])
        except KeyError as exc:
            raise MeshParseError(path, line, f"element refers to unknown node {exc.args[0]}") \
                from None
    conn = np.array(conn, dtype=np.int64).reshape(-1, 3)
    used = np.unique(conn)
    remap = -np.ones(len(ids), dtype=np.int64)
    remap[used] = np.arange(used.size)
    xy, conn = xy[used], remap[conn]
    groups = classify_boundary(xy, conn)
    return Mesh.from_arrays(xy, conn, groups, name=Path(path).stem)


def read_mesh(path, format=None):
    """Read a mesh; ``format`` is ``"native"``, ``"msh"`` or inferred from the suffix."""
    fmt = format or _guess_format(path)
    if fmt == "native":
        return _read_native(path)
    if fmt == "msh":
        return _read_msh(path)
    raise ValueError(f"unknown mesh format {fmt!r}")


def write_mesh(mesh, path, format=None):
    fmt = format or _guess_format(path)
    if fmt == "native":
        out = [NATIVE_HEADER, str(mesh.n_vertices)]
        out += [f"{x!r} {y!r}" for x, y in mesh.coords.tolist()]
        out.append(str(mesh.n_elements))
        out += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
        out += [str(g) for g in mesh.groups.tolist()]
    elif fmt == "msh":
        out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_vertices)]
        out += [f"{k + 1} {x!r} {y!r} 0" for k, (x, y) in enumerate(mesh.coords.tolist())]
        out += ["$EndNodes", "$Elements", str(mesh.n_elements)]
        out += [f"{k + 1} 2 2 0 1 {a + 1} {b + 1} {c + 1}"
                for k, (a, b, c) in enumerate(mesh.triangles.tolist())]
        out.append("$EndElements")
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
