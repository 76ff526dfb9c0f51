"""Concentrating profiles on the half-space ``{x_N > 0}`` and their PDE residuals.

Points are arrays whose last axis holds the ``N`` coordinates, the last one
being the normal coordinate ``x_N``.  Both bubble types accept a batch of
points of shape ``(..., N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .quadrature import QuadResult, RadialIntegrand, integrate_radial, iterated_halfspace_integral, sphere_area

__all__ = [
    "cutoff",
    "TraceBubble",
    "NeumannBubble",
    "eval_trace_bubble",
    "eval_neumann_bubble",
    "trace_bubble_rz",
    "limit_problem_residual",
    "ResidualReport",
    "trace_bubble_energy",
]


def cutoff(dist, R):
    """Quintic blend: 1 on ``dist <= R/4``, 0 on ``dist >= R/2``, C^2 in between."""
    d = np.asarray(dist, dtype=float)
    s = np.clip((d - 0.25 * R) / (0.25 * R), 0.0, 1.0)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def _points(x, N):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != N:
        raise ValueError(f"points need {N} coordinates, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class TraceBubble:
    """``W_eps(x) = eps^{-(N-2)/2} phi(x) W((x - x0)/eps)`` with ``W = gamma/(|y'|^2+(1+y_N)^2)^{(N-2)/2}``.

    ``cutoff_R=None`` switches the cutoff off.
    """

    epsilon: float
    x0: tuple
    gamma_N: float = 1.0
    cutoff_R: float | None = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if len(self.x0) < 3:
            raise ValueError("need N >= 3 coordinates")
        if self.x0[-1] != 0:
            raise ValueError("x0 must lie on the flat boundary x_N = 0")
        if not self.gamma_N > 0:
            raise ValueError("gamma_N must be positive")
        if self.cutoff_R is not None and not self.cutoff_R > 0:
            raise ValueError("cutoff_R must be positive")

    @property
    def N(self):
        return len(self.x0)


def eval_trace_bubble(b: TraceBubble, x):
    N = b.N
    x = _points(x, N)
    d = x - np.asarray(b.x0, dtype=float)
    eps = b.epsilon
    q = np.sum(d[..., :-1] ** 2, axis=-1) + (eps + d[..., -1]) ** 2
    val = b.gamma_N * eps ** ((N - 2) / 2.0) * q ** (-(N - 2) / 2.0)
    if b.cutoff_R is not None:
        val = val * cutoff(np.sqrt(np.sum(d * d, axis=-1)), b.cutoff_R)
    return val


def trace_bubble_rz(epsilon, rho, z, R=None, gamma=1.0):
    """The three-dimensional trace bubble at the origin in axisymmetric coordinates."""
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    val = gamma * np.sqrt(epsilon) / np.sqrt(rho * rho + (epsilon + z) ** 2)
    if R is not None:
        val = val * cutoff(np.hypot(rho, z), R)
    return val


@dataclass(frozen=True)
class NeumannBubble:
    """``U(x) = (eps / (eps^2 + |x'-y'|^2 + (x_N - y_N + mu eps/(N-2))^2))^{(N-2)/2}``, times an optional cutoff."""

    epsilon: float
    y: tuple
    mu: float = 0.0
    cutoff_R: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if len(self.y) < 3:
            raise ValueError("need N >= 3 coordinates")
        if self.y[-1] < 0:
            raise ValueError("center must satisfy y_N >= 0")

    @property
    def N(self):
        return len(self.y)

    @property
    def shift(self):
        return self.mu * self.epsilon / (self.N - 2)


def eval_neumann_bubble(b: NeumannBubble, x):
    N = b.N
    x = _points(x, N)
    d = x - np.asarray(b.y, dtype=float)
    eps = b.epsilon
    den = eps * eps + np.sum(d[..., :-1] ** 2, axis=-1) + (d[..., -1] + b.shift) ** 2
    val = (eps / den) ** ((N - 2) / 2.0)
    if b.cutoff_R is not None:
        val = val * cutoff(np.sqrt(np.sum(d * d, axis=-1)), b.cutoff_R)
    return val


class ResidualReport(NamedTuple):
    max_interior_residual: float
    max_boundary_residual: float


def limit_problem_residual(b: NeumannBubble, interior_samples, boundary_samples, h: float = 1e-3,
                           scaled: bool = True) -> ResidualReport:
    """Finite-difference residuals of ``-Lap U = N(N-2) U^{(N+2)/(N-2)}`` and ``-d_N U = mu U^{N/(N-2)}``.

    The Laplacian uses the ``2N``-point central stencil; the normal derivative
    is central too, so both residuals are O(h^2).  With ``scaled`` each
    residual is divided by its local scale, ``U^{(N+2)/(N-2)}`` inside and
    ``U^{N/(N-2)}`` on the boundary.  The cutoff, if any, is ignored.
    """
    if b.cutoff_R is not None:
        b = NeumannBubble(b.epsilon, b.y, b.mu, None)
    N = b.N
    eye = np.eye(N)

    def U(p):
        return eval_neumann_bubble(b, p)

    xi = np.atleast_2d(_points(interior_samples, N))
    u = U(xi)
    lap = -2.0 * N * u
    for k in range(N):
        lap = lap + U(xi + h * eye[k]) + U(xi - h * eye[k])
    lap /= h * h
    rhs = N * (N - 2) * u ** ((N + 2) / (N - 2))
    r_in = np.abs(-lap - rhs)
    if scaled:
        r_in = r_in / u ** ((N + 2) / (N - 2))

    max_b = 0.0
    xb = np.asarray(boundary_samples, dtype=float)
    if xb.size:
        xb = np.atleast_2d(_points(xb, N))
        ub = U(xb)
        dn = (U(xb + h * eye[-1]) - U(xb - h * eye[-1])) / (2.0 * h)
        r_b = np.abs(-dn - b.mu * ub ** (N / (N - 2)))
        if scaled:
            r_b = r_b / ub ** (N / (N - 2))
        max_b = float(np.max(r_b))
    return ResidualReport(float(np.max(r_in)), max_b)


def trace_bubble_energy(N: int, epsilon: float, gamma_N: float = 1.0, tol: float = 1e-10):
    """Dirichlet energy over the half-space and trace ``2_*``-norm of the uncut ``W_eps``.

    Uses the closed-form gradient ``|grad W_eps|^2 = gamma^2 (N-2)^2 eps^{N-2}
    (|x'|^2 + (eps + x_N)^2)^{-(N-1)}``.  Returns two :class:`QuadResult`.
    """
    w = sphere_area(N - 2)
    c = gamma_N ** 2 * (N - 2) ** 2 * epsilon ** (N - 2) * w

    def inner(t):
        a = (epsilon + t) ** 2
        return RadialIntegrand(lambda r: c * (r * r + a) ** (-(N - 1)), N, N - 2)

    dirichlet = iterated_halfspace_integral(inner, lambda t: np.ones_like(t), 0.0, tol, log_outer=False)
    q = 2.0 * (N - 1) / (N - 2)
    cq = gamma_N ** q * epsilon ** (N - 1) * w
    tr = integrate_radial(RadialIntegrand(lambda r: cq * (r * r + epsilon * epsilon) ** (-(N - 1)), N, N - 2),
                          0.0, np.inf, tol=tol)
    return dirichlet, QuadResult(tr.value, tr.abs_error_estimate, tr.evaluations)
