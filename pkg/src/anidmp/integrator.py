"""Theta-method time stepping and the empirical maximum-principle monitor."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .assembly import assemble, build_stepping
from .linalg import factorize, spmv
from .mesh import INNER, OUTER
from .tensor import DEFAULT_QUADRATURE, QUADRATURE_RULES

__all__ = [
    "TransientProblem",
    "TransientRun",
    "DMPVerdict",
    "UndershootReport",
    "boundary_values",
    "load_vector",
    "step",
    "run",
    "undershoot_report",
    "UNDERSHOOT_TOL",
    "DMP_REL_TOL",
]

UNDERSHOOT_TOL = 1e-12
DMP_REL_TOL = 1e-12


@dataclass
class TransientProblem:
    """Linear parabolic problem on a mesh with Dirichlet data on every boundary vertex.

    Parameters
    ----------
    mesh : Mesh
    field : tensor field or ElementTensors
    theta, dt, n_steps : time discretization
    initial : callable ``u0(x, y)`` on arrays, or a constant
    boundary : mapping from boundary group (``OUTER``, ``INNER``) to a constant
        or a callable ``g(x, y, t)``; missing groups default to 0
    source : callable ``f(x, y, t)`` or None for ``f = 0``
    lumped : use the lumped mass matrix
    """

    mesh: object
    field: object
    theta: float = 1.0
    dt: float = 1e-4
    n_steps: int = 10
    initial: object = 0.0
    boundary: Mapping = field(default_factory=dict)
    source: Callable | None = None
    lumped: bool = False
    quadrature: str = DEFAULT_QUADRATURE
    keep_solutions: bool = True

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be at least 1")
        self.n_steps = int(self.n_steps)


@dataclass(frozen=True)
class DMPVerdict:
    ok: bool
    lower: float
    upper: float
    tolerance: float
    step: int = -1
    vertex: int = -1
    value: float = float("nan")


@dataclass
class TransientRun:
    """Outcome of :func:`run`.

    ``u_min`` is the minimum of the final solution; ``overall_min`` is the
    minimum over all steps (step 0 included).
    """

    problem: TransientProblem
    times: np.ndarray
    u_min_trace: np.ndarray
    u_max_trace: np.ndarray
    argmin_trace: np.ndarray
    final: np.ndarray
    dmp: DMPVerdict
    solutions: list | None = None

    @property
    def u_min(self):
        return float(self.u_min_trace[-1])

    @property
    def u_max(self):
        return float(self.u_max_trace[-1])

    @property
    def overall_min(self):
        return float(self.u_min_trace.min())

    @property
    def overall_max(self):
        return float(self.u_max_trace.max())


# ----------------------------------------------------------------------


def _evaluate(value, x, y, t=None):
    if callable(value):
        out = value(x, y) if t is None else value(x, y, t)
        return np.broadcast_to(np.asarray(out, float), x.shape).copy()
    return np.full(x.shape, float(value))


def boundary_values(mesh, boundary, t):
    """Dirichlet values at the boundary vertices (length ``N_v - N_vi``)."""
    nvi = mesh.interior_count
    xy = mesh.coords[nvi:]
    groups = mesh.groups[nvi:]
    g = np.zeros(xy.shape[0])
    for code, value in (boundary or {}).items():
        if code not in (OUTER, INNER):
            raise ValueError(f"unknown boundary group {code!r}")
        sel = groups == code
        if np.any(sel):
            g[sel] = _evaluate(value, xy[sel, 0], xy[sel, 1], t)
    return g


def load_vector(mesh, f, t, boundary=None, dt=None, quadrature="midpoint"):
    """Load vector ``F`` with ``F_i = int f(., t) phi_i`` on interior rows.

    Boundary rows hold ``g(t) / dt`` when ``boundary`` and ``dt`` are given
    (so that ``dt F`` carries the Dirichlet data), and 0 otherwise.
    """
    n, nvi = mesh.n_vertices, mesh.interior_count
    F = np.zeros(n)
    if f is not None:
        bary, w = QUADRATURE_RULES[quadrature]
        pts = mesh.coords[mesh.triangles]
        qp = np.einsum("qi,kid->kqd", bary, pts)
        fv = _evaluate(f, qp[..., 0], qp[..., 1], t)              # (N_e, Q)
        local = mesh.geometry.area[:, None] * np.einsum("kq,q,qi->ki", fv, w, bary)
        np.add.at(F, mesh.triangles.ravel(), local.ravel())
        F[nvi:] = 0.0
    if boundary is not None and dt is not None:
        F[nvi:] = boundary_values(mesh, boundary, t) / dt
    return F


def step(stepping, factorization, u, rhs_extra=None, boundary=None):
    """Advance one step: solve ``B u^{n+1} = C u^n + rhs_extra``.

    Boundary rows of the right-hand side are overwritten with ``boundary``
    so the identity block reproduces the Dirichlet values exactly.
    """
    rhs = spmv(stepping.C, u)
    if rhs_extra is not None:
        rhs += rhs_extra
    if boundary is not None:
        rhs[rhs.shape[0] - boundary.shape[0]:] = boundary
    return factorization.solve(rhs)


def run(problem):
    """Assemble, factorize once and take ``n_steps`` theta-method steps."""
    p = problem
    mesh = p.mesh
    nvi = mesh.interior_count
    system = assemble(mesh, p.field, p.quadrature)
    stepping = build_stepping(system, p.theta, p.dt, p.lumped)
    lu = factorize(stepping.B)

    u = _evaluate(p.initial, mesh.coords[:, 0], mesh.coords[:, 1])
    times = p.dt * np.arange(p.n_steps + 1)
    umin = np.empty(p.n_steps + 1)
    umax = np.empty(p.n_steps + 1)
    amin = np.empty(p.n_steps + 1, dtype=np.int64)
    amax = np.empty(p.n_steps + 1, dtype=np.int64)
    sols = [u.copy()] if p.keep_solutions else None
    umin[0], umax[0], amin[0], amax[0] = u.min(), u.max(), np.argmin(u), np.argmax(u)

    # data bounds: initial values and Dirichlet values over all times
    lo, hi = min(0.0, float(u.min())), max(0.0, float(u.max()))

    for n in range(p.n_steps):
        t_new = times[n + 1]
        g = boundary_values(mesh, p.boundary, t_new)
        lo, hi = min(lo, float(g.min(initial=0.0))), max(hi, float(g.max(initial=0.0)))
        extra = None
        if p.source is not None:
            extra = p.dt * load_vector(mesh, p.source, times[n] + p.theta * p.dt)
            extra[nvi:] = 0.0
        u = step(stepping, lu, u, extra, g)
        umin[n + 1], umax[n + 1] = u.min(), u.max()
        amin[n + 1], amax[n + 1] = np.argmin(u), np.argmax(u)
        if sols is not None:
            sols.append(u.copy())

    tol = DMP_REL_TOL * max(hi - lo, 1.0e-300)
    verdict = DMPVerdict(True, lo, hi, tol)
    bad = np.flatnonzero((umin < lo - tol) | (umax > hi + tol))
    if bad.size:
        first = int(bad[0])
        low = umin[first] < lo - tol
        v = int(amin[first] if low else amax[first])
        verdict = DMPVerdict(False, lo, hi, tol, first, v,
                             float(umin[first] if low else umax[first]))
    return TransientRun(p, times, umin, umax, amin, u, verdict, sols)


# ----------------------------------------------------------------------


@dataclass(frozen=True)
class UndershootReport:
    classification: str          # "none" or "undershoot"
    minimum: float               # over all steps and vertices
    step: int
    vertex: int
    location: tuple
    final_minimum: float

    def summary(self):
        if self.classification == "none":
            return f"none (min {self.minimum:.3e})"
        x, y = self.location
        return (f"undershoot {self.minimum:.3e} at step {self.step}, vertex {self.vertex} "
                f"({x:.4f}, {y:.4f}); final-step min {self.final_minimum:.3e}")


def undershoot_report(result):
    """Classify the negative excursions of a completed run."""
    s = int(np.argmin(result.u_min_trace))
    v = int(result.argmin_trace[s])
    val = float(result.u_min_trace[s])
    xy = tuple(float(c) for c in result.problem.mesh.coords[v])
    kind = "none" if val >= -UNDERSHOOT_TOL else "undershoot"
    return UndershootReport(kind, val, s, v, xy, result.u_min)

