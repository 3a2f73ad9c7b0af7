"""Metric angles, the two mesh conditions and the time-step bounds.

Angles are measured in the metric ``D_K^{-1}``.  For a triangle the angle
between the faces opposite vertices ``i`` and ``j`` is the interior angle at
the remaining vertex, so :class:`MetricAngles` stores one angle per vertex.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .mesh import ElementGeometry, GeometryArrays
from .tensor import (DEFAULT_QUADRATURE, DiffusionTensor, ElementTensors, element_tensors,
                     sqrt_and_inv_sqrt)

__all__ = [
    "COS_TOL",
    "ANGLE_TOL",
    "MetricAngles",
    "ConditionReport",
    "StepBounds",
    "metric_angles",
    "mesh_metric_angles",
    "check_anisotropic_nonobtuse",
    "arccot",
    "delaunay_lhs",
    "edge_delaunay_values",
    "check_delaunay_type",
    "dt_bounds_ani",
    "dt_bounds_del",
    "dt_upper_lumped",
    "regular_simplex_bounds",
    "simplex_geometry",
    "regular_simplex_quantities",
    "MeshQuality",
    "mesh_quality",
]

COS_TOL = 1e-12
ANGLE_TOL = 1e-10

_OTHERS = np.array([[1, 2], [2, 0], [0, 1]])


# ----------------------------------------------------------------------
# input normalization


def _q_stack(geometry):
    if isinstance(geometry, ElementGeometry):
        return geometry.q_vectors[None], np.array([geometry.volume]), geometry.heights[None]
    if isinstance(geometry, GeometryArrays):
        return geometry.q, geometry.area, geometry.heights
    raise TypeError("expected ElementGeometry or GeometryArrays")


def _tensor_stack(tensors, n):
    if isinstance(tensors, ElementTensors):
        return tensors
    if isinstance(tensors, DiffusionTensor):
        tensors = tensors.matrix
    m = np.asarray(tensors, dtype=float)
    if m.ndim == 2:
        m = np.broadcast_to(m, (n, 2, 2))
    return ElementTensors.from_matrices(m)


def _mesh_tensors(mesh, field, quadrature):
    if isinstance(field, ElementTensors):
        if len(field) != mesh.n_elements:
            raise ValueError("one averaged tensor per element required")
        return field
    return element_tensors(mesh, field, quadrature)


# ----------------------------------------------------------------------
# metric angles


@dataclass(frozen=True)
class MetricAngles:
    """Metric angle data for a stack of triangles.

    ``cos[k, i, j]`` is the cosine of the angle between faces ``i`` and ``j``
    (diagonal unused, set to 1); ``angles[k, l]`` is the interior angle at
    local vertex ``l``; ``heights[k, i]`` is the metric height ``1/|D^{1/2} q_i|``.
    """

    cos: np.ndarray
    angles: np.ndarray
    heights: np.ndarray

    @property
    def max_angle(self):
        return float(self.angles.max())

    def pair_angle(self, i, j):
        """Angle between faces ``i`` and ``j`` of every element."""
        if i == j:
            raise ValueError("faces must differ")
        return self.angles[:, 3 - i - j]


def metric_angles(geometry, tensors):
    """Angles of the element(s) measured in the metric ``D_K^{-1}``.

    Parameters
    ----------
    geometry : ElementGeometry or GeometryArrays
    tensors : ElementTensors, DiffusionTensor or (2, 2) / (N, 2, 2) array

    Returns
    -------
    MetricAngles
    """
    q, _, _ = _q_stack(geometry)
    t = _tensor_stack(tensors, q.shape[0])
    qDq = np.einsum("kia,kab,kjb->kij", q, t.matrices, q)
    norm = np.sqrt(np.einsum("kii->ki", qDq))
    cos = -qDq / (norm[:, :, None] * norm[:, None, :])
    idx = np.arange(3)
    cos[:, idx, idx] = 1.0
    pair = cos[:, _OTHERS[:, 0], _OTHERS[:, 1]]
    angles = np.arccos(np.clip(pair, -1.0, 1.0))
    return MetricAngles(cos, angles, 1.0 / norm)


def mesh_metric_angles(mesh, field, quadrature=DEFAULT_QUADRATURE):
    return metric_angles(mesh.geometry, _mesh_tensors(mesh, field, quadrature))


# ----------------------------------------------------------------------
# condition reports


@dataclass
class ConditionReport:
    """Outcome of a mesh condition check.

    ``worst_value`` is in radians; ``violations`` lists element indices (angle
    condition) or interior-edge indices (Delaunay-type condition).
    """

    name: str
    satisfied: bool
    worst_value: float
    threshold: float
    tolerance: float
    worst_index: int
    violations: list = field(default_factory=list)

    def summary(self):
        verdict = "satisfied" if self.satisfied else "violated"
        return f"{verdict} ({self.worst_value / math.pi:.2f}π)"

    def to_dict(self):
        d = asdict(self)
        d["worst_value_over_pi"] = self.worst_value / math.pi
        d["violations"] = [int(v) for v in self.violations]
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


def check_anisotropic_nonobtuse(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """Check that every metric angle is at most pi/2 (up to ``ANGLE_TOL``)."""
    ang = mesh_metric_angles(mesh, field, quadrature).angles
    per_elem = ang.max(axis=1)
    thr = math.pi / 2
    bad = np.flatnonzero(per_elem > thr + ANGLE_TOL)
    k = int(np.argmax(per_elem))
    return ConditionReport("anoac", bad.size == 0, float(per_elem[k]), thr, ANGLE_TOL, k,
                           bad.tolist())


def arccot(x):
    """Inverse cotangent with range (0, pi)."""
    return np.pi / 2 - np.arctan(x)


def delaunay_lhs(angle_k, angle_kp, det_k, det_kp):
    """Left-hand side of the Delaunay-type inequality for one or more edges.

    Parameters
    ----------
    angle_k, angle_kp : metric angles opposite the shared edge in K and K'
    det_k, det_kp : determinants of ``D_K`` and ``D_K'``
    """
    angle_k, angle_kp = np.asarray(angle_k, float), np.asarray(angle_kp, float)
    r = np.sqrt(np.asarray(det_k, float) / np.asarray(det_kp, float))
    with np.errstate(divide="ignore"):
        cot_k, cot_kp = 1.0 / np.tan(angle_k), 1.0 / np.tan(angle_kp)
    val = 0.5 * (angle_k + arccot(r * cot_k) + angle_kp + arccot(cot_kp / r))
    return val if val.ndim else float(val)


def _edge_angles(mesh, t):
    ma = metric_angles(mesh.geometry, t)
    adj = mesh.adjacency
    ak = ma.angles[adj.elements[:, 0], adj.opposite[:, 0]]
    akp = ma.angles[adj.elements[:, 1], adj.opposite[:, 1]]
    return adj, ak, akp


def edge_delaunay_values(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """Delaunay-type left-hand side for every interior edge."""
    t = _mesh_tensors(mesh, field, quadrature)
    adj, ak, akp = _edge_angles(mesh, t)
    return delaunay_lhs(ak, akp, t.det[adj.elements[:, 0]], t.det[adj.elements[:, 1]])


def check_delaunay_type(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """Check the edge-wise Delaunay-type inequality (value <= pi)."""
    vals = np.atleast_1d(edge_delaunay_values(mesh, field, quadrature))
    thr = math.pi
    if vals.size == 0:
        return ConditionReport("delaunay", True, 0.0, thr, ANGLE_TOL, -1, [])
    bad = np.flatnonzero(vals > thr + ANGLE_TOL)
    e = int(np.argmax(vals))
    return ConditionReport("delaunay", bad.size == 0, float(vals[e]), thr, ANGLE_TOL, e,
                           bad.tolist())


# ----------------------------------------------------------------------
# time-step bounds


@dataclass
class StepBounds:
    """Admissible time-step interval ``lower <= dt <= upper``.

    ``excluded`` counts element pairs (or edges) whose metric cosine (or
    cotangent sum) is not positive.  They are left out of the lower bound; a
    nonzero count means the sign condition on those entries cannot be met
    through the step size with a consistent mass matrix.
    """

    lower: float
    upper: float
    theta: float
    d: int = 2
    source: str = ""
    excluded: int = 0
    arg_lower: int = -1
    arg_upper: int = -1
    notes: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.lower <= self.upper

    @property
    def consistent_mass_unsatisfiable(self):
        return self.excluded > 0 or math.isinf(self.lower)

    def contains(self, dt):
        return self.lower <= dt <= self.upper

    def to_dict(self):
        d = asdict(self)
        for k in ("lower", "upper"):
            if math.isinf(d[k]):
                d[k] = "inf"
        d["feasible"] = self.feasible
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def summary(self):
        lo = "inf" if math.isinf(self.lower) else f"{self.lower:.3e}"
        up = "inf" if math.isinf(self.upper) else f"{self.upper:.3e}"
        return f"{self.source}: {lo} <= dt <= {up}"


def _check_theta(theta):
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")


def dt_bounds_ani(mesh, field, theta, d=2, quadrature=DEFAULT_QUADRATURE, metric=False):
    """Step-size interval guaranteeing the M-matrix / nonnegativity structure.

    Lower bound ``max h_i h_j / (cos a_ij lambda_min) / (theta (d+1)(d+2))``,
    upper bound ``2 min h_i^2 / lambda_max / ((1-theta)(d+1)(d+2))``.  Pairs with
    ``cos a_ij <= COS_TOL`` are skipped in the lower bound and counted in
    ``excluded``.

    With ``metric=True`` the metric heights replace ``h / sqrt(lambda)``.
    """
    _check_theta(theta)
    t = _mesh_tensors(mesh, field, quadrature)
    geo = mesh.geometry
    ma = metric_angles(geo, t)
    c = (d + 1) * (d + 2)
    notes = []

    if metric:
        hh = ma.heights
        lo_scale = np.ones(len(t))
        up_h2 = hh ** 2
    else:
        hh = geo.heights
        lo_scale = 1.0 / t.lambda_min
        up_h2 = geo.heights ** 2 / t.lambda_max[:, None]

    pair_cos = ma.cos[:, _OTHERS[:, 0], _OTHERS[:, 1]]          # (N_e, 3), pair opposite l
    hprod = hh[:, _OTHERS[:, 0]] * hh[:, _OTHERS[:, 1]]
    ok = pair_cos > COS_TOL
    excluded = int(np.count_nonzero(~ok))
    if excluded:
        notes.append(f"{excluded} element pairs with metric angle >= pi/2 left out of the "
                     "lower bound (consistent mass cannot make those entries nonpositive)")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(ok, hprod / pair_cos * lo_scale[:, None], -np.inf)
    if theta == 0:
        lower, arg_lo = math.inf, -1
        notes.append("theta = 0 admits no lower bound")
    elif not np.any(ok):
        lower, arg_lo = math.inf, -1
        notes.append("no acute metric pair: lower bound unattainable")
    else:
        flat = int(np.argmax(vals))
        lower, arg_lo = float(vals.flat[flat]) / (theta * c), flat // 3

    if theta == 1:
        upper, arg_up = math.inf, -1
    else:
        flat = int(np.argmin(up_h2))
        upper, arg_up = 2.0 * float(up_h2.flat[flat]) / ((1 - theta) * c), flat // 3
    src = "ani-metric" if metric else "ani"
    return StepBounds(lower, upper, theta, d, src, excluded, arg_lo, arg_up, notes)


def _del_upper_terms(mesh, t):
    """Per-vertex ``|omega_i| / sum_K |K| lambda_max h_{i,K}^{-2}``."""
    geo = mesh.geometry
    contrib = geo.area[:, None] * t.lambda_max[:, None] / geo.heights ** 2
    denom = np.zeros(mesh.n_vertices)
    np.add.at(denom, mesh.triangles.ravel(), contrib.ravel())
    return mesh.patch_areas / denom


def _del_upper(mesh, t, theta, factor):
    nvi = mesh.interior_count
    if nvi == 0:
        raise ValueError("mesh has no interior vertices")
    if theta == 1:
        return math.inf, -1
    terms = _del_upper_terms(mesh, t)[:nvi]
    i = int(np.argmin(terms))
    return float(terms[i]) / (factor * (1 - theta)), i


def dt_bounds_del(mesh, field, theta, quadrature=DEFAULT_QUADRATURE):
    """Two-dimensional step-size interval built from edge and patch quantities.

    Edges whose cotangent sum is not positive are skipped in the lower bound
    and counted in ``excluded``.
    """
    _check_theta(theta)
    t = _mesh_tensors(mesh, field, quadrature)
    if mesh.interior_count == 0:
        raise ValueError("mesh has no interior vertices")
    notes = []
    adj, ak, akp = _edge_angles(mesh, t)
    k, kp = adj.elements[:, 0], adj.elements[:, 1]
    sk, skp = np.sqrt(t.det[k]), np.sqrt(t.det[kp])
    with np.errstate(divide="ignore", invalid="ignore"):
        den = sk / np.tan(ak) + skp / np.tan(akp)
    area = mesh.geometry.area
    ok = den > COS_TOL * (sk + skp)
    excluded = int(np.count_nonzero(~ok))
    if excluded:
        notes.append(f"{excluded} interior edges with non-positive cotangent sum left out "
                     "of the lower bound")
    if theta == 0:
        lower, arg_lo = math.inf, -1
        notes.append("theta = 0 admits no lower bound")
    elif not np.any(ok):
        lower, arg_lo = math.inf, -1
        notes.append("no edge with positive cotangent sum: lower bound unattainable")
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(ok, (area[k] + area[kp]) / den, -np.inf)
        arg_lo = int(np.argmax(vals))
        lower = float(vals[arg_lo]) / (6.0 * theta)
    upper, arg_up = _del_upper(mesh, t, theta, 6.0)
    return StepBounds(lower, upper, theta, 2, "del", excluded, arg_lo, arg_up, notes)


def dt_upper_lumped(mesh, field, theta, variant="ani", d=2, quadrature=DEFAULT_QUADRATURE):
    """Upper step-size bound of the lumped-mass scheme (the lower bound is 0)."""
    _check_theta(theta)
    t = _mesh_tensors(mesh, field, quadrature)
    variant = variant.lower()
    if variant == "ani":
        if theta == 1:
            upper, arg = math.inf, -1
        else:
            h2 = mesh.geometry.heights ** 2 / t.lambda_max[:, None]
            flat = int(np.argmin(h2))
            upper, arg = float(h2.flat[flat]) / ((1 - theta) * (d + 1)), flat // 3
    elif variant == "del":
        upper, arg = _del_upper(mesh, t, theta, 3.0)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return StepBounds(0.0, upper, theta, d, f"lumped-{variant}", 0, -1, arg, [])


# ----------------------------------------------------------------------
# regular simplices


def simplex_geometry(points):
    """Volume, heights and face-pair cosines of a d-simplex.

    Parameters
    ----------
    points : (d+1, d) array of vertices

    Returns
    -------
    volume : float
    heights : (d+1,) array
    cos : (d+1, d+1) array of dihedral-angle cosines (diagonal set to 1)
    """
    p = np.asarray(points, dtype=float)
    d = p.shape[1]
    E = (p[1:] - p[0]).T
    G = np.linalg.inv(E)                # rows: gradients of barycentric coords 1..d
    q = np.vstack([-G.sum(axis=0), G])
    norm = np.linalg.norm(q, axis=1)
    cos = -(q @ q.T) / np.outer(norm, norm)
    np.fill_diagonal(cos, 1.0)
    return abs(np.linalg.det(E)) / math.factorial(d), 1.0 / norm, cos


def regular_simplex_bounds(d, e=None, n_elements=None, alpha=1.0, theta=1.0, sigma_h=None,
                           domain_volume=1.0, lumped=False):
    """Closed-form step bounds for meshes of regular simplices.

    Give the common edge length ``e`` or the element count ``n_elements``.
    With ``sigma_h`` (metric volume of the domain) the bounds for meshes that
    are uniform in the metric ``D^{-1}`` are returned instead, and ``alpha``
    and ``domain_volume`` are ignored.

    Returns
    -------
    StepBounds
    """
    _check_theta(theta)
    if sigma_h is None and e is None and n_elements is None:
        raise ValueError("need e, n_elements or sigma_h with n_elements")
    fac = math.factorial(d)
    if sigma_h is not None:
        if n_elements is None:
            raise ValueError("sigma_h form needs n_elements")
        base = n_elements ** (-2.0 / d) * (sigma_h * fac / math.sqrt(d + 1)) ** (2.0 / d)
        lo_c, src = base / (d + 2), "simplex-metric"
        up_c = 2.0 * base / (d * (d + 2))
        lump_c = base / d
    elif e is not None:
        e2 = float(e) ** 2
        lo_c = e2 / (2 * alpha * (d + 2))
        up_c = e2 / (alpha * d * (d + 2))
        lump_c = e2 / (2 * alpha * d)
        src = "simplex-edge"
    else:
        base = n_elements ** (-2.0 / d) * (domain_volume * fac / math.sqrt(d + 1)) ** (2.0 / d)
        lo_c = base / (alpha * (d + 2))
        up_c = 2.0 * base / (alpha * d * (d + 2))
        lump_c = base / (alpha * d)
        src = "simplex-count"
    upper_c = lump_c if lumped else up_c
    lower = 0.0 if lumped else (math.inf if theta == 0 else lo_c / theta)
    upper = math.inf if theta == 1 else upper_c / (1 - theta)
    return StepBounds(lower, upper, theta, d, src + ("-lumped" if lumped else ""))


def regular_simplex_quantities(d, e):
    """Height, volume and dihedral cosine of the regular d-simplex with edge ``e``."""
    h = e * math.sqrt((d + 1) / (2 * d))
    vol = math.sqrt(d + 1) / (math.factorial(d) * math.sqrt(2 ** d)) * e ** d
    return h, vol, 1.0 / d


# ----------------------------------------------------------------------
# mesh quality


@dataclass(frozen=True)
class MeshQuality:
    alignment: np.ndarray
    equidistribution: np.ndarray
    sigma_h: float


def mesh_quality(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """Alignment and equidistribution measures of every element.

    Both equal 1 for a mesh that is uniform in the metric ``D^{-1}``.  The
    reference element is the equilateral triangle with unit edges.
    """
    t = _mesh_tensors(mesh, field, quadrature)
    J = mesh.geometry.jacobian
    _, inv_sqrt = sqrt_and_inv_sqrt(t.matrices)
    Dinv = inv_sqrt @ inv_sqrt
    G = np.einsum("kba,kbc,kcd->kad", J, Dinv, J)
    tr = np.einsum("kii->k", G)
    det = np.linalg.det(G)
    align = tr / 2.0 / np.sqrt(det)
    vol = mesh.geometry.area / np.sqrt(t.det)
    sigma = float(vol.sum())
    return MeshQuality(align, vol * mesh.n_elements / sigma, sigma)
