"""Data of one boundary value problem instance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import critical_exponents
from .nonlinearity import Perturbation

__all__ = ["ProblemInstance", "eval_field"]


def eval_field(f, rho, z):
    """Evaluate a coefficient given as a constant or a callable ``f(rho, z)``."""
    rho = np.asarray(rho, dtype=float)
    if callable(f):
        return np.broadcast_to(np.asarray(f(rho, np.asarray(z, dtype=float)), dtype=float), rho.shape)
    return np.full(rho.shape, float(f))


@dataclass(eq=False)
class ProblemInstance:
    """Coefficients of ``-div(p grad u) = beta |u|^{2*-2} u + a u + g(u)`` with ``d_nu u = Q |u|^{2_*-2} u``.

    ``p``, ``Q`` and ``a`` are constants or callables of the meridian
    coordinates ``(rho, z)``.  ``g`` is a :class:`Perturbation` (its own ``a``
    is ignored here) or ``None``.  ``delta > 0`` lowers both critical
    exponents by ``delta``, which gives the compact subcritical surrogate.
    """

    N: int = 3
    beta: float = 0.0
    p: float | Callable = 1.0
    Q: float | Callable = 1.0
    a: float | Callable = 0.0
    g: Perturbation | None = None
    delta: float = 0.0

    def __post_init__(self):
        critical_exponents(self.N)
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    @property
    def q_interior(self) -> float:
        return float(critical_exponents(self.N).two_star) - self.delta

    @property
    def q_trace(self) -> float:
        return float(critical_exponents(self.N).two_sub) - self.delta

    def with_(self, **changes) -> "ProblemInstance":
        d = dict(N=self.N, beta=self.beta, p=self.p, Q=self.Q, a=self.a, g=self.g, delta=self.delta)
        d.update(changes)
        return ProblemInstance(**d)
