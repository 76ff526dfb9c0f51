"""P1 finite elements for the energy functional on the axisymmetric half-ball.

For a field ``u(rho, z)`` on the meridian section the energy is

    Phi(u) = 1/2 int p |grad u|^2 - beta/q1 int |u|^q1 - 1/q2 int_bdry p Q |u|^q2 - int F(x, u)

with ``F(x, u) = a u^2 / 2 + G(u)``, volume element ``2 pi rho drho dz`` and
surface element ``2 pi rho dl`` on the flat and curved boundary edges.
``q1`` and ``q2`` are the (possibly lowered) critical exponents of the
:class:`~twocrit.problem.ProblemInstance`.

Volume integrals use the 6-point degree-4 triangle rule, boundary integrals
4-point Gauss-Legendre on each edge.  The discrete energy is an explicit
function of the nodal values and :meth:`Discretization.derivative` is its
exact gradient.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionNotSupported, NoConvergence, NoNegativeEnd, SingularGram
from .mesh import AxisymMesh, DiscreteField
from .problem import ProblemInstance, eval_field

__all__ = [
    "Discretization",
    "discretize",
    "EnergyBreakdown",
    "assemble_energy",
    "assemble_gradient",
    "RayProfile",
    "maximize_ray",
    "ray_profile",
    "first_eigenvalue",
    "SplitRow",
    "bl_split_check",
    "write_ray_csv",
    "write_breakdown_csv",
    "richardson_limit",
]

# Degree-4 rule on the reference triangle: (barycentric coords, weight / area).
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
_TRI_BARY = np.array([
    [_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
    [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2],
])
_TRI_W = np.array([_W1] * 3 + [_W2] * 3)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_EDGE_S = 0.5 * (_GL_X + 1.0)
_EDGE_W = 0.5 * _GL_W


def _values(u):
    return u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)


class Discretization:
    """Quadrature data and matrices for one mesh and one set of coefficients."""

    def __init__(self, mesh: AxisymMesh, inst: ProblemInstance):
        if inst.N != 3:
            raise DimensionNotSupported("finite-element model is three-dimensional (axisymmetric) only")
        self.mesh = mesh
        self.inst = inst
        V, T = mesh.vertices, mesh.triangles
        nv, nt = len(V), len(T)
        area = mesh.signed_areas()
        self.area = area

        # Volume quadrature points.
        xq = np.einsum("qk,tkd->tqd", _TRI_BARY, V[T])           # (nt, 6, 2)
        self.rho = xq[..., 0].ravel()
        self.z = xq[..., 1].ravel()
        self.w = (area[:, None] * _TRI_W[None, :] * 2.0 * math.pi * xq[..., 0]).ravel()
        rows = np.repeat(np.arange(nt * 6), 3)
        cols = np.repeat(T, 6, axis=0).ravel()
        vals = np.tile(_TRI_BARY, (nt, 1)).ravel()
        self.P = sp.csr_matrix((vals, (rows, cols)), shape=(nt * 6, nv))

        # Boundary quadrature points on flat and curved edges.
        E = np.concatenate([mesh.flat_edges, mesh.curved_edges])
        a, b = V[E[:, 0]], V[E[:, 1]]
        length = np.linalg.norm(b - a, axis=1)
        xb = a[:, None, :] + _EDGE_S[None, :, None] * (b - a)[:, None, :]
        self.rho_b = xb[..., 0].ravel()
        self.z_b = xb[..., 1].ravel()
        self.wb = (length[:, None] * _EDGE_W[None, :] * 2.0 * math.pi * xb[..., 0]).ravel()
        ne = len(E)
        rows = np.repeat(np.arange(ne * 4), 2)
        cols = np.repeat(E, 4, axis=0).ravel()
        vals = np.stack([1.0 - np.tile(_EDGE_S, ne), np.tile(_EDGE_S, ne)], axis=1).ravel()
        self.Pb = sp.csr_matrix((vals, (rows, cols)), shape=(ne * 4, nv))

        # Basis gradients, constant per triangle.
        v0, v1, v2 = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
        g = np.empty((nt, 3, 2))
        g[:, 0] = np.stack([v1[:, 1] - v2[:, 1], v2[:, 0] - v1[:, 0]], axis=1)
        g[:, 1] = np.stack([v2[:, 1] - v0[:, 1], v0[:, 0] - v2[:, 0]], axis=1)
        g[:, 2] = np.stack([v0[:, 1] - v1[:, 1], v1[:, 0] - v0[:, 0]], axis=1)
        self.grad = g / (2.0 * area)[:, None, None]

        self.p_q = eval_field(inst.p, self.rho, self.z)
        self.a_q = eval_field(inst.a, self.rho, self.z)
        self.pQ_b = eval_field(inst.p, self.rho_b, self.z_b) * eval_field(inst.Q, self.rho_b, self.z_b)
        self.K = self.stiffness(self.p_q)
        self.M = (self.P.T @ sp.diags(self.w) @ self.P).tocsc()
        self._riesz = None

    def stiffness(self, coef_q):
        """Stiffness matrix of ``int coef |grad u|^2`` with ``coef`` sampled at the quadrature points."""
        T = self.mesh.triangles
        nt = len(T)
        ce = (self.w * coef_q).reshape(nt, 6).sum(axis=1)
        ke = ce[:, None, None] * np.einsum("tid,tjd->tij", self.grad, self.grad)
        rows = np.repeat(T, 3, axis=1).ravel()
        cols = np.tile(T, (1, 3)).ravel()
        n = self.mesh.n_vertices
        return sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsc()

    def weighted_mass(self, coef_q):
        return (self.P.T @ sp.diags(self.w * coef_q) @ self.P).tocsc()

    # -- energy and derivatives ------------------------------------------------

    def breakdown(self, u) -> "EnergyBreakdown":
        u = _values(u)
        inst = self.inst
        q1, q2 = inst.q_interior, inst.q_trace
        uq = self.P @ u
        ub = self.Pb @ u
        dirichlet = float(u @ (self.K @ u))
        interior = float(self.w @ np.abs(uq) ** q1)
        trace = float((self.wb * self.pQ_b) @ np.abs(ub) ** q2)
        F = 0.5 * self.a_q * uq * uq
        if inst.g is not None:
            F = F + inst.g.G(uq)
        pert = float(self.w @ F)
        total = 0.5 * dirichlet - inst.beta / q1 * interior - trace / q2 - pert
        return EnergyBreakdown(dirichlet, interior, trace, pert, total, inst.beta)

    def energy(self, u) -> float:
        return self.breakdown(u).total

    def _g(self, uq):
        return self.inst.g.g(uq) if self.inst.g is not None else 0.0

    def derivative(self, u) -> np.ndarray:
        """Exact gradient of the discrete energy with respect to the nodal values."""
        u = _values(u)
        inst = self.inst
        q1, q2 = inst.q_interior, inst.q_trace
        uq = self.P @ u
        ub = self.Pb @ u
        sq = inst.beta * np.abs(uq) ** (q1 - 2) * uq + self.a_q * uq + self._g(uq)
        sb = self.pQ_b * np.abs(ub) ** (q2 - 2) * ub
        return self.K @ u - self.P.T @ (self.w * sq) - self.Pb.T @ (self.wb * sb)

    def hessian(self, u):
        u = _values(u)
        inst = self.inst
        q1, q2 = inst.q_interior, inst.q_trace
        uq = self.P @ u
        ub = self.Pb @ u
        dq = inst.beta * (q1 - 1) * np.abs(uq) ** (q1 - 2) + self.a_q
        if inst.g is not None:
            h = 1e-6 * np.maximum(1.0, np.abs(uq))
            dq = dq + (inst.g.g(uq + h) - inst.g.g(uq - h)) / (2 * h)
        db = (q2 - 1) * self.pQ_b * np.abs(ub) ** (q2 - 2)
        return (self.K - self.P.T @ sp.diags(self.w * dq) @ self.P
                - self.Pb.T @ sp.diags(self.wb * db) @ self.Pb).tocsc()

    def riesz(self, d):
        """Solve ``(K_p + M) r = d``: the representative of a functional in the ``H^1`` metric."""
        if self._riesz is None:
            try:
                self._riesz = spla.splu((self.K + self.M).tocsc())
            except RuntimeError as exc:
                raise SingularGram(f"stiffness + mass matrix is singular: {exc}") from exc
        r = self._riesz.solve(np.asarray(d, dtype=float))
        if not np.all(np.isfinite(r)):
            raise SingularGram("Riesz solve produced non-finite values")
        return r

    def inner(self, v, w):
        """``H^1`` inner product ``int p grad v . grad w + int v w``."""
        v, w = _values(v), _values(w)
        return float(v @ (self.K @ w) + v @ (self.M @ w))

    def norm(self, v):
        return math.sqrt(max(self.inner(v, v), 0.0))

    def gradient(self, u):
        d = self.derivative(u)
        r = self.riesz(d)
        return r, math.sqrt(max(float(d @ r), 0.0))

    def boundary_measure(self):
        return float(self.wb.sum())


def discretize(mesh: AxisymMesh, inst: ProblemInstance) -> Discretization:
    """Cached :class:`Discretization` for ``(mesh, inst)``."""
    key = id(inst)
    hit = mesh._cache.get(key)
    if hit is not None and hit[0] is inst:
        return hit[1]
    disc = Discretization(mesh, inst)
    mesh._cache[key] = (inst, disc)
    return disc


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    interior_critical: float
    trace_critical: float
    perturbation: float
    total: float
    beta: float

    FIELDS = ("dirichlet", "interior_critical", "trace_critical", "perturbation", "total", "beta")

    def to_dict(self):
        return asdict(self)


def assemble_energy(u, inst: ProblemInstance, mesh: AxisymMesh) -> EnergyBreakdown:
    return discretize(mesh, inst).breakdown(u)


def assemble_gradient(u, inst: ProblemInstance, mesh: AxisymMesh):
    """Riesz representative of ``Phi'(u)`` in the ``H^1`` metric and its dual norm."""
    r, nrm = discretize(mesh, inst).gradient(u)
    return DiscreteField(mesh, r), nrm


# -- rays ----------------------------------------------------------------------


@dataclass
class RayProfile:
    t: np.ndarray
    values: np.ndarray
    t_star: float
    sup: float

    def rows(self):
        return list(zip(self.t.tolist(), self.values.tolist()))


def maximize_ray(fun: Callable[[float], float], t_grid: Sequence[float], rtol: float = 1e-8) -> RayProfile:
    """Sample ``fun`` on ``t_grid``, then refine the discrete maximum by golden-section search.

    Raises :class:`NoNegativeEnd` unless ``fun`` is negative somewhere on the grid.
    """
    t = np.asarray(t_grid, dtype=float)
    vals = np.array([fun(ti) for ti in t])
    if not np.any(vals < 0):
        raise NoNegativeEnd("energy never negative on the ray grid; extend the grid")
    k = int(np.argmax(vals))          # first index among ties
    lo = t[max(k - 1, 0)]
    hi = t[min(k + 1, len(t) - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > rtol * max(abs(a), abs(b), 1e-300):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    t_star = 0.5 * (a + b)
    f_star = fun(t_star)
    if vals[k] > f_star:
        t_star, f_star = float(t[k]), float(vals[k])
    return RayProfile(t, vals, float(t_star), float(f_star))


def ray_profile(u, inst: ProblemInstance, mesh: AxisymMesh, t_grid, rtol: float = 1e-8) -> RayProfile:
    """``Phi(t u)`` along ``t_grid`` with a golden-section refined supremum."""
    disc = discretize(mesh, inst)
    uv = _values(u)
    return maximize_ray(lambda t: disc.energy(t * uv), t_grid, rtol)


# -- eigenproblem --------------------------------------------------------------


def first_eigenvalue(p, a, mesh: AxisymMesh, weighted: bool = False, tol: float = 1e-12,
                     max_iter: int = 2000):
    """Smallest Neumann eigenvalue of ``-Lap u - a u`` by shifted inverse power iteration.

    The Rayleigh quotient is ``(int |grad u|^2 - a u^2) / int u^2``; with
    ``weighted=True`` the gradient term becomes ``int p |grad u|^2``.
    Returns ``(lambda1, eigenfield)`` with the eigenfield of unit ``L^2`` norm
    and non-negative mean.
    """
    inst = ProblemInstance(N=3, p=p if weighted else 1.0, a=a)
    disc = discretize(mesh, inst)
    Ma = disc.weighted_mass(disc.a_q)
    A = (disc.K - Ma).tocsc()
    M = disc.M
    sigma = float(np.min(-disc.a_q)) - 1.0
    lu = spla.splu((A - sigma * M).tocsc())
    v = mesh.vertices
    x = 1.0 + 0.01 * (v[:, 0] ** 2 + v[:, 1])
    x /= math.sqrt(x @ (M @ x))
    lam = float(x @ (A @ x))
    for _ in range(max_iter):
        y = lu.solve(M @ x)
        y /= math.sqrt(y @ (M @ y))
        lam_new = float(y @ (A @ y))
        res = A @ y - lam_new * (M @ y)
        rnorm = math.sqrt(abs(res @ lu.solve(res)))
        x = y
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)) and rnorm <= math.sqrt(tol) * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise NoConvergence(f"inverse iteration did not converge in {max_iter} steps")
    if x @ (M @ np.ones_like(x)) < 0:
        x = -x
    return lam, DiscreteField(mesh, x)


# -- splitting -----------------------------------------------------------------


@dataclass(frozen=True)
class SplitRow:
    """Energy of the defect ``v_j = u_j - u``."""

    dirichlet: float
    interior_critical: float
    trace_critical: float
    nehari_defect: float      # dirichlet - beta * interior - trace


def bl_split_check(u_seq, u, inst: ProblemInstance, mesh: AxisymMesh):
    """Defect triples of ``u_j - u`` for each iterate ``u_j`` (list of :class:`SplitRow`)."""
    disc = discretize(mesh, inst)
    base = _values(u)
    out = []
    for uj in u_seq:
        b = disc.breakdown(_values(uj) - base)
        out.append(SplitRow(b.dirichlet, b.interior_critical, b.trace_critical,
                            b.dirichlet - inst.beta * b.interior_critical - b.trace_critical))
    return out


# -- CSV -----------------------------------------------------------------------


def write_ray_csv(profile: RayProfile, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "phi"])
    for t, v in profile.rows():
        w.writerow([repr(t), repr(v)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_breakdown_csv(rows, path=None, key: str = "epsilon") -> str:
    """CSV of ``(key, EnergyBreakdown)`` pairs with one column per breakdown field."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key, *EnergyBreakdown.FIELDS])
    for k, b in rows:
        w.writerow([repr(float(k))] + [repr(float(getattr(b, f))) for f in EnergyBreakdown.FIELDS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def richardson_limit(h, values) -> float:
    """Extrapolate ``values(h)`` to ``h = 0`` through the interpolating polynomial (Neville's scheme)."""
    h = np.asarray(h, dtype=float)
    T = np.array(values, dtype=float)
    n = len(h)
    for k in range(1, n):
        T[: n - k] = (h[k:] * T[: n - k] - h[: n - k] * T[1: n - k + 1]) / (h[k:] - h[: n - k])
    return float(T[0])
