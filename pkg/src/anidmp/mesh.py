"""Triangle meshes, structured generators and element geometry.

Vertices are always stored interior-first: indices ``0 .. interior_count-1``
are interior vertices and the remaining ones carry Dirichlet data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "INTERIOR",
    "OUTER",
    "INNER",
    "MeshError",
    "DegenerateElementError",
    "Mesh",
    "ElementGeometry",
    "GeometryArrays",
    "EdgeAdjacency",
    "generate_mesh45",
    "generate_mesh135",
    "element_geometry",
    "geometry_arrays",
    "build_edge_adjacency",
    "reorder_interior_first",
    "boundary_edges",
]

# boundary group codes
INTERIOR = 0
OUTER = 1
INNER = 2

GROUP_NAMES = {INTERIOR: "interior", OUTER: "outer", INNER: "inner"}

HOLE = (0.4, 0.6)

# equilateral reference element with unit edges
REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
REFERENCE_AREA = np.sqrt(3.0) / 4.0


class MeshError(ValueError):
    """Structural problem with a mesh (bad connectivity, ordering, ...)."""


class DegenerateElementError(MeshError):
    def __init__(self, element, area=0.0):
        super().__init__(f"element {element} is degenerate (signed area {area:.3e})")
        self.element = element


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable 2D triangle mesh.

    Parameters
    ----------
    coords : (N_v, 2) float array
    triangles : (N_e, 3) int array, counterclockwise local order
    groups : (N_v,) int array of ``INTERIOR``, ``OUTER`` or ``INNER``

    Use :meth:`from_arrays` to build a mesh from arbitrary input; it fixes the
    orientation and the vertex ordering.
    """

    coords: np.ndarray
    triangles: np.ndarray
    groups: np.ndarray
    name: str = field(default="mesh", compare=False)

    def __post_init__(self):
        for a in (self.coords, self.triangles, self.groups):
            a.setflags(write=False)

    @classmethod
    def from_arrays(cls, coords, triangles, groups, name="mesh"):
        coords = np.array(coords, dtype=float).reshape(-1, 2)
        tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        groups = np.array(groups, dtype=np.int8).reshape(-1)
        if groups.shape[0] != coords.shape[0]:
            raise MeshError("one boundary group per vertex required")
        if tris.size and (tris.min() < 0 or tris.max() >= coords.shape[0]):
            raise MeshError("triangle refers to a non-existent vertex")
        area2 = _signed_area2(coords, tris)
        bad = np.flatnonzero(area2 == 0.0)
        if bad.size:
            raise DegenerateElementError(int(bad[0]))
        neg = area2 < 0
        tris[neg] = tris[neg][:, [0, 2, 1]]
        mesh, _ = reorder_interior_first(cls(coords, tris, groups, name))
        return mesh

    # ------------------------------------------------------------------
    @property
    def n_vertices(self):
        return self.coords.shape[0]

    @property
    def n_elements(self):
        return self.triangles.shape[0]

    @property
    def boundary_flag(self):
        return self.groups != INTERIOR

    @property
    def interior_count(self):
        return int(np.count_nonzero(self.groups == INTERIOR))

    @cached_property
    def geometry(self) -> GeometryArrays:
        return geometry_arrays(self)

    @cached_property
    def adjacency(self) -> EdgeAdjacency:
        return build_edge_adjacency(self)

    @cached_property
    def max_height(self):
        return float(self.geometry.heights.max())

    @cached_property
    def patch_areas(self):
        """``|omega_i|``, total area of the elements around each vertex."""
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.triangles.ravel(), np.repeat(self.geometry.area, 3))
        return out

    def validate(self):
        """Check the invariants; raise :class:`MeshError` on the first failure."""
        nvi = self.interior_count
        if np.any(self.groups[:nvi] != INTERIOR) or np.any(self.groups[nvi:] == INTERIOR):
            raise MeshError("vertices are not ordered interior-first")
        area2 = _signed_area2(self.coords, self.triangles)
        if np.any(area2 <= 0):
            raise DegenerateElementError(int(np.flatnonzero(area2 <= 0)[0]), float(area2.min() / 2))
        edges, counts = _edge_counts(self.triangles)
        if np.any(counts > 2):
            e = edges[np.flatnonzero(counts > 2)[0]]
            raise MeshError(f"non-manifold edge ({e[0]}, {e[1]})")
        bverts = np.unique(edges[counts == 1])
        if bverts.size and np.any(self.groups[bverts] == INTERIOR):
            v = bverts[self.groups[bverts] == INTERIOR][0]
            raise MeshError(f"vertex {v} lies on a boundary edge but is flagged interior")
        return self

    def __repr__(self):
        return (f"Mesh({self.name!r}, N_v={self.n_vertices}, N_e={self.n_elements}, "
                f"N_vi={self.interior_count})")


def _signed_area2(coords, tris):
    p = coords[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]


def _edge_counts(tris):
    e = np.sort(tris[:, [1, 2, 2, 0, 0, 1]].reshape(-1, 2), axis=1)
    return np.unique(e, axis=0, return_counts=True)


# ----------------------------------------------------------------------
# generators


def _structured(n, holed, northeast, name):
    if n < 1:
        raise ValueError("n must be positive")
    if holed and (n < 5 or n % 5):
        raise ValueError(f"holed structured mesh needs n divisible by 5 and n >= 5, got n={n}")
    lo, hi = 2 * n // 5, 3 * n // 5
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    if holed:
        keep = ~((i >= lo) & (i < hi) & (j >= lo) & (j < hi))
        i, j = i[keep], j[keep]
    vid = lambda a, b: b * (n + 1) + a  # noqa: E731
    sw, se, ne, nw = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    if northeast:
        tris = np.concatenate([np.stack([sw, se, ne], 1), np.stack([sw, ne, nw], 1)])
    else:
        tris = np.concatenate([np.stack([sw, se, nw], 1), np.stack([se, ne, nw], 1)])
    # keep each cell's two triangles adjacent in element order
    ncell = i.size
    order = np.stack([np.arange(ncell), np.arange(ncell) + ncell], 1).ravel()
    tris = tris[order]

    used = np.unique(tris)
    remap = -np.ones((n + 1) ** 2, dtype=np.int64)
    remap[used] = np.arange(used.size)
    gi, gj = used % (n + 1), used // (n + 1)
    coords = np.stack([gi / n, gj / n], 1)
    groups = np.full(used.size, INTERIOR, dtype=np.int8)
    groups[(gi == 0) | (gi == n) | (gj == 0) | (gj == n)] = OUTER
    if holed:
        on_hole = (((gi == lo) | (gi == hi)) & (gj >= lo) & (gj <= hi)) | \
                  (((gj == lo) | (gj == hi)) & (gi >= lo) & (gi <= hi))
        groups[on_hole] = INNER
    return Mesh.from_arrays(coords, remap[tris], groups, name=name)


def generate_mesh45(n, holed=True):
    """Uniform grid of ``n x n`` squares, each cut along its SW-NE diagonal.

    With ``holed=True`` the cells inside ``[0.4, 0.6]^2`` are removed, which
    requires ``n`` to be a multiple of 5.  The maximal element height is ``1/n``.
    """
    return _structured(n, holed, True, f"mesh45:{n}" + ("" if holed else ":full"))


def generate_mesh135(n, holed=True):
    """As :func:`generate_mesh45` with the cells cut along the NW-SE diagonal."""
    return _structured(n, holed, False, f"mesh135:{n}" + ("" if holed else ":full"))


# ----------------------------------------------------------------------
# element geometry


@dataclass(frozen=True)
class ElementGeometry:
    """Geometric data of one triangle.

    ``inward_normals[i]`` is the unit normal of the edge opposite vertex ``i``
    pointing toward that vertex; ``q_vectors[i] = inward_normals[i] / heights[i]``
    is the gradient of the linear basis function of vertex ``i``.
    """

    vertices: np.ndarray
    volume: float
    inward_normals: np.ndarray
    heights: np.ndarray
    q_vectors: np.ndarray
    jacobian: np.ndarray


@dataclass(frozen=True)
class GeometryArrays:
    """Vectorized :class:`ElementGeometry` for all elements of a mesh."""

    area: np.ndarray        # (N_e,)
    q: np.ndarray           # (N_e, 3, 2)
    heights: np.ndarray     # (N_e, 3)
    jacobian: np.ndarray    # (N_e, 2, 2), map from the equilateral reference element


def _geometry(points):
    """points: (..., 3, 2)."""
    e1 = points[..., 1, :] - points[..., 0, :]
    e2 = points[..., 2, :] - points[..., 0, :]
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = np.stack([e2[..., 1], -e2[..., 0]], -1) / det[..., None]
        g2 = np.stack([-e1[..., 1], e1[..., 0]], -1) / det[..., None]
        q = np.stack([-g1 - g2, g1, g2], -2)
        heights = 1.0 / np.linalg.norm(q, axis=-1)
    edges = np.stack([e1, e2], -1)
    ref = REFERENCE_VERTICES
    ref_inv = np.linalg.inv(np.stack([ref[1] - ref[0], ref[2] - ref[0]], -1))
    jac = edges @ ref_inv
    return det / 2.0, q, heights, jac


def geometry_arrays(mesh):
    area, q, h, jac = _geometry(mesh.coords[mesh.triangles])
    if np.any(area <= 0):
        k = int(np.flatnonzero(area <= 0)[0])
        raise DegenerateElementError(k, float(area[k]))
    return GeometryArrays(area, q, h, jac)


def element_geometry(mesh, k):
    """Geometry of element ``k`` of ``mesh`` (or of a bare ``(3, 2)`` vertex array
    when ``mesh`` is an array and ``k`` is None)."""
    if k is None:
        pts = np.asarray(mesh, dtype=float)
        label = "<triangle>"
    else:
        if not 0 <= k < mesh.n_elements:
            raise IndexError(f"element index {k} out of range")
        pts = mesh.coords[mesh.triangles[k]]
        label = k
    area, q, h, jac = _geometry(pts)
    if not area > 0:
        raise DegenerateElementError(label, float(area))
    normals = q * h[:, None]
    return ElementGeometry(pts, float(area), normals, h, q, jac)


# ----------------------------------------------------------------------
# adjacency


@dataclass(frozen=True)
class EdgeAdjacency:
    """Interior edges and the two elements sharing each of them.

    For edge ``e``: ``vertices[e] = (i, j)`` with ``i < j``, ``elements[e] =
    (K, K')``, ``local_i[e]``/``local_j[e]`` the local indices of ``i`` and
    ``j`` within ``K`` and ``K'``, and ``opposite[e]`` the local index of the
    vertex opposite the edge in each element.
    """

    vertices: np.ndarray
    elements: np.ndarray
    local_i: np.ndarray
    local_j: np.ndarray
    opposite: np.ndarray

    def __len__(self):
        return self.vertices.shape[0]


def _local_edges(tris):
    # edge l is opposite local vertex l
    a = tris[:, [1, 2, 0]].ravel()
    b = tris[:, [2, 0, 1]].ravel()
    elem = np.repeat(np.arange(tris.shape[0]), 3)
    loc = np.tile(np.arange(3), tris.shape[0])
    return a, b, elem, loc


def build_edge_adjacency(mesh):
    tris = mesh.triangles
    a, b, elem, loc = _local_edges(tris)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    order = np.lexsort((elem, hi, lo))
    lo, hi, elem, loc = lo[order], hi[order], elem[order], loc[order]
    key = lo * mesh.n_vertices + hi
    start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    counts = np.diff(np.r_[start, key.size])
    if np.any(counts > 2):
        s = start[np.flatnonzero(counts > 2)[0]]
        raise MeshError(f"non-manifold edge ({lo[s]}, {hi[s]}) shared by more than two elements")
    s = start[counts == 2]
    elems = np.stack([elem[s], elem[s + 1]], 1)
    opp = np.stack([loc[s], loc[s + 1]], 1)
    verts = np.stack([lo[s], hi[s]], 1)
    tri_e = tris[elems]                                   # (E, 2, 3)
    li = np.argmax(tri_e == verts[:, None, 0:1], axis=2)
    lj = np.argmax(tri_e == verts[:, None, 1:2], axis=2)
    return EdgeAdjacency(verts, elems, li, lj, opp)


def boundary_edges(mesh):
    """(n, 2) array of edges that belong to exactly one element."""
    edges, counts = _edge_counts(mesh.triangles)
    return edges[counts == 1]


def reorder_interior_first(mesh):
    """Renumber vertices so interior vertices come first (stable).

    Returns ``(new_mesh, perm)`` where ``perm[old] = new``.
    """
    groups = np.asarray(mesh.groups)
    interior = groups == INTERIOR
    new_to_old = np.concatenate([np.flatnonzero(interior), np.flatnonzero(~interior)])
    perm = np.empty_like(new_to_old)
    perm[new_to_old] = np.arange(new_to_old.size)
    if np.array_equal(new_to_old, np.arange(new_to_old.size)):
        new = Mesh(np.array(mesh.coords), np.array(mesh.triangles), np.array(groups), mesh.name)
    else:
        new = Mesh(np.array(mesh.coords)[new_to_old], perm[np.asarray(mesh.triangles)],
                   groups[new_to_old].copy(), mesh.name)
    return new, perm
