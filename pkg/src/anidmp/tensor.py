"""Diffusion tensor fields, element averages and 2x2 symmetric linear algebra."""
from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FieldError",
    "DiffusionTensor",
    "ConstantField",
    "RotatedEigenField",
    "EXAMPLE1",
    "EXAMPLE2",
    "EXAMPLE3",
    "BUILTIN_FIELDS",
    "ElementTensors",
    "parse_expression",
    "field_from_spec",
    "evaluate",
    "element_average",
    "element_tensors",
    "eig_sym2",
    "sqrt_and_inv_sqrt",
    "QUADRATURE_RULES",
]


class FieldError(ValueError):
    """Invalid field definition or a non-SPD value."""


@dataclass(frozen=True)
class DiffusionTensor:
    """Symmetric positive definite 2x2 tensor ``[[d11, d12], [d12, d22]]``."""

    d11: float
    d12: float
    d22: float

    def __post_init__(self):
        if not (self.d11 > 0 and self.d11 * self.d22 - self.d12 ** 2 > 0):
            raise FieldError(f"tensor ({self.d11}, {self.d12}, {self.d22}) is not positive definite")

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @property
    def matrix(self):
        return np.array([[self.d11, self.d12], [self.d12, self.d22]])

    @property
    def det(self):
        return self.d11 * self.d22 - self.d12 ** 2


# ----------------------------------------------------------------------
# fields
#
# Every field exposes ``components(x, y) -> (d11, d12, d22)`` on arrays.


def _rotated(theta, k1, k2):
    c, s = np.cos(theta), np.sin(theta)
    return (k1 * c * c + k2 * s * s, (k1 - k2) * c * s, k1 * s * s + k2 * c * c)


@dataclass(frozen=True)
class ConstantField:
    tensor: DiffusionTensor
    name: str = "constant"

    def components(self, x, y):
        shape = np.shape(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))[0])
        t = self.tensor
        return tuple(np.full(shape, v) for v in (t.d11, t.d12, t.d22))

    @property
    def is_constant(self):
        return True


@dataclass(frozen=True)
class RotatedEigenField:
    """``D = R(theta) diag(k1, k2) R(theta)^T`` with scalar functions of (x, y).

    The callables take and return numpy arrays.
    """

    theta: object
    k1: object
    k2: object
    name: str = "rotated"

    def components(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        th = np.broadcast_to(self.theta(x, y), x.shape)
        k1 = np.broadcast_to(self.k1(x, y), x.shape)
        k2 = np.broadcast_to(self.k2(x, y), x.shape)
        if np.any(k1 <= 0) or np.any(k2 <= 0):
            bad = np.flatnonzero((k1 <= 0) | (k2 <= 0))[0]
            raise FieldError(f"{self.name}: eigenvalue not positive at "
                             f"({x.flat[bad]:.6g}, {y.flat[bad]:.6g})")
        return _rotated(th, k1, k2)

    @property
    def is_constant(self):
        return False


def _example2_theta(x, y):
    dx, dy = x - 0.5, y - 0.5
    th = np.arctan2(dy, dx) + np.pi / 2
    return np.where((dx == 0) & (dy == 0), 0.0, th)


EXAMPLE1 = RotatedEigenField(lambda x, y: np.full_like(x, np.pi / 4),
                             lambda x, y: np.full_like(x, 100.0),
                             lambda x, y: np.full_like(x, 1.0), name="example1")
EXAMPLE2 = RotatedEigenField(_example2_theta,
                             lambda x, y: np.full_like(x, 100.0),
                             lambda x, y: np.full_like(x, 1.0), name="example2")
EXAMPLE3 = RotatedEigenField(
    lambda x, y: 0.5 * np.arctan(np.cos(np.pi * x / 4)),
    lambda x, y: 100.0 * np.cos((x * x + y * y) * np.pi / 6),
    lambda x, y: 10.0 * np.sin((x * x + y * y + 1) * np.pi / 6),
    name="example3")

BUILTIN_FIELDS = {"example1": EXAMPLE1, "example2": EXAMPLE2, "example3": EXAMPLE3}


def evaluate(field, x, y):
    """Tensor of ``field`` at the single point ``(x, y)``."""
    d = field.components(np.array([x], float), np.array([y], float))
    return DiffusionTensor(*(float(v[0]) for v in d))


# ----------------------------------------------------------------------
# expression subset for user fields

_FUNCS = {"sin": np.sin, "cos": np.cos, "arctan": np.arctan, "atan": np.arctan}
_CONSTS = {"pi": np.pi}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide}


def parse_expression(text):
    """Compile a scalar expression in ``x`` and ``y`` to a vectorized callable.

    Allowed: numbers, ``x``, ``y``, ``pi``, ``+ - * /``, unary minus and the
    functions ``sin``, ``cos``, ``arctan``.
    """
    if isinstance(text, (int, float)):
        text = repr(float(text))
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise FieldError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            v = float(node.value)
            return lambda x, y: np.full_like(x, v)
        if isinstance(node, ast.Name):
            if node.id == "x":
                return lambda x, y: x
            if node.id == "y":
                return lambda x, y: y
            if node.id in _CONSTS:
                v = _CONSTS[node.id]
                return lambda x, y: np.full_like(x, v)
            raise FieldError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda x, y: -f(x, y)
            return f
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, a, b = _BINOPS[type(node.op)], build(node.left), build(node.right)
            return lambda x, y: op(a(x, y), b(x, y))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            fn, a = _FUNCS[node.func.id], build(node.args[0])
            return lambda x, y: fn(a(x, y))
        raise FieldError(f"unsupported construct {ast.dump(node)[:40]}... in {text!r}")

    return build(tree)


def field_from_spec(spec):
    """Build a field from a configuration mapping.

    Accepted forms are ``{"builtin": "example1"}``, ``{"constant": [d11, d12, d22]}``
    and ``{"rotated": {"theta": expr, "k1": expr, "k2": expr}}``.  A bare string
    is read as a builtin name.
    """
    if isinstance(spec, str):
        spec = {"builtin": spec}
    if not isinstance(spec, dict) or len(spec) != 1:
        raise FieldError("field spec needs exactly one of builtin, constant, rotated")
    (kind, value), = spec.items()
    if kind == "builtin":
        try:
            return BUILTIN_FIELDS[str(value).lower()]
        except KeyError:
            raise FieldError(f"unknown builtin field {value!r}") from None
    if kind == "constant":
        if len(value) != 3:
            raise FieldError("constant field needs [d11, d12, d22]")
        return ConstantField(DiffusionTensor(*map(float, value)))
    if kind == "rotated":
        missing = {"theta", "k1", "k2"} - set(value)
        if missing:
            raise FieldError(f"rotated field missing {sorted(missing)}")
        return RotatedEigenField(parse_expression(value["theta"]), parse_expression(value["k1"]),
                                 parse_expression(value["k2"]), name="custom")
    raise FieldError(f"unknown field kind {kind!r}")


# ----------------------------------------------------------------------
# element averages

# barycentric points and weights of the supported rules
QUADRATURE_RULES = {
    # nodal average; exact for affine integrands
    "vertex": (np.eye(3), np.full(3, 1 / 3)),
    # edge midpoints; exact for quadratics
    "midpoint": (np.array([[0, .5, .5], [.5, 0, .5], [.5, .5, 0]]), np.full(3, 1 / 3)),
    "centroid": (np.full((1, 3), 1 / 3), np.ones(1)),
}

DEFAULT_QUADRATURE = "vertex"


@dataclass(frozen=True)
class ElementTensors:
    """Per-element averaged tensors ``D_K`` and their eigen data."""

    matrices: np.ndarray      # (N_e, 2, 2)
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    det: np.ndarray

    def __len__(self):
        return self.matrices.shape[0]

    def tensor(self, k):
        return DiffusionTensor.from_matrix(self.matrices[k])

    @classmethod
    def from_matrices(cls, mats):
        mats = np.asarray(mats, dtype=float).reshape(-1, 2, 2)
        lmin, lmax, _ = eig_sym2(mats)
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        if np.any(lmin <= 0) or np.any(mats[:, 0, 0] <= 0):
            k = int(np.flatnonzero(lmin <= 0)[0])
            raise FieldError(f"averaged tensor of element {k} is not positive definite")
        return cls(mats, lmin, lmax, det)


def _average(field, points, quadrature):
    """points: (N_e, 3, 2) triangle vertices."""
    try:
        bary, w = QUADRATURE_RULES[quadrature]
    except KeyError:
        raise ValueError(f"unknown quadrature rule {quadrature!r}") from None
    qp = np.einsum("qi,kid->kqd", bary, points)
    d11, d12, d22 = field.components(qp[..., 0], qp[..., 1])
    d11, d12, d22 = (np.asarray(c) @ w for c in (d11, d12, d22))
    mats = np.stack([np.stack([d11, d12], -1), np.stack([d12, d22], -1)], -2)
    return ElementTensors.from_matrices(mats)


def element_average(field, geometry, quadrature=DEFAULT_QUADRATURE):
    """Averaged tensor ``D_K`` of one element.

    Parameters
    ----------
    field : tensor field
    geometry : ElementGeometry
    quadrature : {"vertex", "midpoint", "centroid"}

    Returns
    -------
    ElementTensors of length 1
    """
    return _average(field, np.asarray(geometry.vertices, float)[None], quadrature)


def element_tensors(mesh, field, quadrature=DEFAULT_QUADRATURE):
    """``D_K`` for every element of ``mesh``."""
    return _average(field, mesh.coords[mesh.triangles], quadrature)


# ----------------------------------------------------------------------
# 2x2 symmetric algebra


def _as_stack(t):
    if isinstance(t, DiffusionTensor):
        return t.matrix[None], True
    a = np.asarray(t, dtype=float)
    if a.ndim == 2:
        return a[None], True
    return a, False


def eig_sym2(tensor):
    """Closed-form eigen decomposition of symmetric 2x2 matrices.

    Parameters
    ----------
    tensor : DiffusionTensor, (2, 2) array or (N, 2, 2) array

    Returns
    -------
    lambda_min, lambda_max, principal
        ``principal`` is the unit eigenvector of ``lambda_max``.  Scalars for a
        single tensor, arrays otherwise.
    """
    m, single = _as_stack(tensor)
    a, b, c = m[:, 0, 0], 0.5 * (m[:, 0, 1] + m[:, 1, 0]), m[:, 1, 1]
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    lmax = mean + rad
    # avoid cancellation in the smaller root
    det = a * c - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        lmin = np.minimum(np.where(lmax != 0, det / lmax, mean - rad), lmax)
    phi = 0.5 * np.arctan2(2 * b, a - c)
    vec = np.stack([np.cos(phi), np.sin(phi)], -1)
    if single:
        return float(lmin[0]), float(lmax[0]), vec[0]
    return lmin, lmax, vec


def sqrt_and_inv_sqrt(tensor):
    """Return ``(D^{1/2}, D^{-1/2})`` of an SPD 2x2 tensor (or a stack)."""
    m, single = _as_stack(tensor)
    lmin, lmax, v = eig_sym2(m)
    lmin, lmax = np.atleast_1d(lmin), np.atleast_1d(lmax)
    v = v.reshape(-1, 2)
    w = np.stack([-v[:, 1], v[:, 0]], -1)
    P = np.einsum("ki,kj->kij", v, v)
    Q = np.einsum("ki,kj->kij", w, w)
    s = np.sqrt(lmax)[:, None, None] * P + np.sqrt(lmin)[:, None, None] * Q
    si = P / np.sqrt(lmax)[:, None, None] + Q / np.sqrt(lmin)[:, None, None]
    if single:
        return s[0], si[0]
    return s, si
