"""Exponents, bubble constants, best Sobolev constants and the energy threshold.

Two routes lead to the best constants ``S`` (volume) and ``S1`` (trace):

``"formula"``
    ``S = 2 A_0 / (2 B_0)^(2/2*)`` and ``S1 = A_0 / C_0^(2/2_*)`` built from the
    half-space bubble constants.  Only available for ``N >= 4``.
``"direct"``
    The Sobolev quotient of the extremal profile evaluated by quadrature.
    Works for every ``N >= 3``.

For ``N >= 4`` the two routes disagree by fixed factors (the gradient
integrand behind ``A_mu`` carries no ``(N-2)^2``).  The formula route is
kept as the default because every other constant of the threshold analysis
(``t_mu``, ``h(t_mu)``) is expressed through the same ``A_mu, B_mu, C_mu``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionNotSupported, DimensionTooSmall, DivergentConstant, InvalidCoefficients
from .quadrature import RadialIntegrand, integrate_radial, iterated_halfspace_integral, sphere_area

__all__ = [
    "Exponents",
    "BubbleConstants",
    "SobolevConstants",
    "ThresholdReport",
    "critical_exponents",
    "bubble_constants",
    "sobolev_constants",
    "trace_quotient",
    "space_quotient",
    "k1_over_k2",
    "k3_from_k2",
    "t_zero",
    "threshold_M",
    "threshold_report",
    "two_term_energy",
]


@dataclass(frozen=True)
class Exponents:
    N: int
    two_star: Fraction
    two_sub: Fraction


def _check_dim(N):
    if int(N) != N:
        raise DimensionTooSmall(f"dimension must be an integer, got {N!r}")
    if N < 3:
        raise DimensionTooSmall(f"N must be >= 3, got {N}")


def critical_exponents(N: int) -> Exponents:
    """``2* = 2N/(N-2)`` and ``2_* = 2(N-1)/(N-2)`` as exact fractions."""
    _check_dim(N)
    N = int(N)
    return Exponents(N, Fraction(2 * N, N - 2), Fraction(2 * (N - 1), N - 2))


def k1_over_k2(N, mu):
    """Ratio ``K1/K2``; exact when ``mu`` is a :class:`~fractions.Fraction` or int."""
    _check_dim(N)
    if N < 4:
        raise DimensionNotSupported("K1/K2 needs N >= 4")
    return (N - 2) ** 2 * (Fraction(N + 1, N - 3) + Fraction(2 * (N - 1), N - 3) * mu * mu)


def k3_from_k2(N, mu, K2):
    return 2 * (N - 1) * mu * K2


def t_zero(N: int, p_x0: float) -> float:
    """Scale ``(p N (N-2))^(1/(2*-2))`` of the bubble maximizing the pure critical ray."""
    _check_dim(N)
    if not p_x0 > 0:
        raise InvalidCoefficients("p(x0) must be positive")
    return (p_x0 * N * (N - 2)) ** ((N - 2) / 4.0)


@dataclass(frozen=True)
class BubbleConstants:
    N: int
    mu: float
    A_mu: float
    B_mu: float
    C_mu: float
    K1: float | None = None
    K3: float | None = None
    error_estimates: dict = field(default_factory=dict)


def bubble_constants(N: int, mu: float, tol: float = 1e-10, K2_ref: float | None = None) -> BubbleConstants:
    """Half-space bubble constants ``A_mu``, ``B_mu``, ``C_mu``.

    ``A_mu`` and ``B_mu`` are integrals over the slab ``x_N > mu/(N-2)`` of
    ``(|y|^2+t^2)/(1+|y|^2+t^2)^N`` and ``1/(1+|y|^2+t^2)^N`` respectively.
    ``C_mu`` is ``(1+(mu/(N-2))^2)^(-(N-2)/2)`` times the trace integral of
    ``(1+|y|^2)^(-(N-1))``.  ``K1`` and ``K3`` are only returned when a
    reference ``K2`` is supplied, since ``K2`` itself has no known value.
    """
    _check_dim(N)
    if N == 3:
        raise DimensionNotSupported(
            "bubble constants are restricted to N >= 4; use route='direct' for S and S1 at N=3")
    if not tol > 0:
        raise ValueError("tol must be positive")
    N = int(N)
    mu = float(mu)
    s = mu / (N - 2)
    w = sphere_area(N - 2)

    def slab(numer):
        def inner(t):
            t2 = t * t
            return RadialIntegrand(lambda r: numer(r * r + t2) / (1.0 + r * r + t2) ** N, N, N - 2)
        return iterated_halfspace_integral(inner, lambda t: np.full_like(t, w), s, tol,
                                           log_outer=False)

    ra = slab(lambda q: q)
    rb = slab(lambda q: np.ones_like(q))
    rc = integrate_radial(RadialIntegrand(lambda r: (1.0 + r * r) ** (-(N - 1)), N, N - 2), 0.0, np.inf,
                          tol=tol)
    pref = (1.0 + s * s) ** (-(N - 2) / 2.0)
    A, B, C = ra.value, rb.value, w * pref * rc.value
    for name, v in (("A_mu", A), ("B_mu", B), ("C_mu", C)):
        if not math.isfinite(v):
            raise DivergentConstant(f"{name} is not finite")
    errs = {"A_mu": ra.abs_error_estimate, "B_mu": rb.abs_error_estimate,
            "C_mu": w * pref * rc.abs_error_estimate}
    K1 = K3 = None
    if K2_ref is not None:
        K1 = float(k1_over_k2(N, Fraction(mu))) * K2_ref
        K3 = k3_from_k2(N, mu, K2_ref)
    return BubbleConstants(N, mu, A, B, C, K1, K3, errs)


def _gradW_slab(N, scale, tol):
    # |grad(c W)|^2 = c^2 (N-2)^2 (|y|^2 + (1+t)^2)^{-(N-1)}, integrated over t > 0.
    w = sphere_area(N - 2)
    c2 = scale * scale * (N - 2) ** 2 * w

    def inner(t):
        b = (1.0 + t) ** 2
        return RadialIntegrand(lambda r: c2 * (r * r + b) ** (-(N - 1)), N, N - 2)

    return iterated_halfspace_integral(inner, lambda t: np.ones_like(t), 0.0, tol,
                                       log_outer=False, scale_floor=1e-300)


def trace_quotient(N: int, scale: float = 1.0, tol: float = 1e-10):
    """Trace Sobolev quotient of ``scale * (|x'|^2 + (1+x_N)^2)^(-(N-2)/2)`` on the half-space.

    Returns ``(value, abs_error)``.
    """
    _check_dim(N)
    q = 2.0 * (N - 1) / (N - 2)
    num = _gradW_slab(N, scale, tol)
    c = abs(scale) ** q
    den = integrate_radial(RadialIntegrand(lambda r: c * (1.0 + r * r) ** (-(N - 1)), N, N - 2),
                           0.0, np.inf, tol=tol, scale_floor=1e-300)
    D = sphere_area(N - 2) * den.value
    val = num.value / D ** (2.0 / q)
    rel = num.abs_error_estimate / abs(num.value) + (2.0 / q) * den.abs_error_estimate / abs(den.value)
    return val, abs(val) * rel


def space_quotient(N: int, scale: float = 1.0, tol: float = 1e-10):
    """Sobolev quotient of ``scale * (1+|x|^2)^(-(N-2)/2)`` over ``R^N``; ``(value, abs_error)``."""
    _check_dim(N)
    p = 2.0 * N / (N - 2)
    c2 = scale * scale * (N - 2) ** 2
    cp = abs(scale) ** p
    num = integrate_radial(RadialIntegrand(lambda r: c2 * r * r / (1.0 + r * r) ** N, N, N - 1),
                           0.0, np.inf, tol=tol, scale_floor=1e-300)
    den = integrate_radial(RadialIntegrand(lambda r: cp / (1.0 + r * r) ** N, N, N - 1),
                           0.0, np.inf, tol=tol, scale_floor=1e-300)
    w = sphere_area(N - 1)
    val = w * num.value / (w * den.value) ** (2.0 / p)
    rel = num.abs_error_estimate / num.value + (2.0 / p) * den.abs_error_estimate / den.value
    return val, val * rel


class SobolevConstants:
    """``(S, S1)`` pair that also carries error bounds and the route used.

    Unpacks as a 2-tuple: ``S, S1 = sobolev_constants(4)``.
    """

    def __init__(self, S, S1, S_err, S1_err, route):
        self.S, self.S1, self.S_err, self.S1_err, self.route = S, S1, S_err, S1_err, route

    def __iter__(self):
        yield self.S
        yield self.S1

    def __repr__(self):
        return f"SobolevConstants(S={self.S!r}, S1={self.S1!r}, route={self.route!r})"


def _formula_S(N, A, B, C):
    e = critical_exponents(N)
    S = 2.0 * A / (2.0 * B) ** (2.0 / float(e.two_star))
    S1 = A / C ** (2.0 / float(e.two_sub))
    return S, S1


def sobolev_constants(N: int, tol: float = 1e-10, route: str | None = None) -> SobolevConstants:
    """Best constants ``S`` and ``S1``.

    ``route`` defaults to ``"formula"`` for ``N >= 4`` and ``"direct"`` for
    ``N = 3`` (the module docstring explains the difference).
    """
    _check_dim(N)
    route = route or ("direct" if N == 3 else "formula")
    if route == "direct":
        S, dS = space_quotient(N, tol=tol)
        S1, dS1 = trace_quotient(N, tol=tol)
        return SobolevConstants(S, S1, dS, dS1, route)
    if route != "formula":
        raise ValueError(f"unknown route {route!r}")
    bc = bubble_constants(N, 0.0, tol)
    A, B, C = bc.A_mu, bc.B_mu, bc.C_mu
    S, S1 = _formula_S(N, A, B, C)
    e = critical_exponents(N)
    eA, eB, eC = (bc.error_estimates[k] for k in ("A_mu", "B_mu", "C_mu"))
    dS = S * (eA / A + (2.0 / float(e.two_star)) * eB / B)
    dS1 = S1 * (eA / A + (2.0 / float(e.two_sub)) * eC / C)
    return SobolevConstants(S, S1, dS, dS1, route)


def _E(N, p0, p_x0, Q_x0, S, S1):
    T = p_x0 / Q_x0 ** (N - 2) * S1 ** (N - 1)
    return (T / (p0 * S) ** (N / 2.0)) ** (2.0 / (N - 2))


def threshold_M(N, p0, p_x0, Q_x0, S, S1, E=None):
    """Energy level ``M(S, S1)``; pass ``E`` to override the default exponent ratio."""
    if E is None:
        E = _E(N, p0, p_x0, Q_x0, S, S1)
    T = p_x0 / Q_x0 ** (N - 2) * S1 ** (N - 1)
    sig = 1.0 + math.sqrt(1.0 + 4.0 * E)
    return T * 2.0 ** (N - 2) / sig ** (N - 2) * (1.0 / N - (N - 2) / (N * (N - 1) * sig))


def two_term_energy(t, N, p, Q, A, B, C):
    """``t^2/2 pA - t^2*/2* B - t^2_*/2_* pQC``: the ray energy of the half-space bubble."""
    e = critical_exponents(N)
    ts, tb = float(e.two_star), float(e.two_sub)
    t = np.asarray(t, dtype=float)
    return 0.5 * t * t * p * A - t ** ts / ts * B - t ** tb / tb * p * Q * C


@dataclass
class ThresholdReport:
    N: int
    mu: float
    p0: float
    p_x0: float
    Q_x0: float
    route: str
    S: float
    S1: float
    E: float
    E_prime: float
    M: float
    M_prime: float
    trace_threshold: float
    interior_threshold: float
    t0: float
    A_mu: float | None = None
    B_mu: float | None = None
    C_mu: float | None = None
    t_mu: float | None = None
    h_at_t_mu: float | None = None
    error_estimates: dict = field(default_factory=dict)

    @property
    def chain_holds(self) -> bool:
        return 0.0 < self.M < min(self.trace_threshold, self.interior_threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chain_holds"] = self.chain_holds
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def threshold_report(N: int, p0: float = 1.0, p_x0: float | None = None, Q_x0: float = 1.0,
                     mu: float = 0.0, tol: float = 1e-10, route: str | None = None,
                     allow_p_mismatch: bool = False) -> ThresholdReport:
    """Populate every threshold quantity for one set of coefficient values.

    ``p_x0`` defaults to ``p0``.  A different value is rejected unless
    ``allow_p_mismatch`` is set, in which case a warning is issued and
    ``p0 <= p_x0`` is still required.
    """
    _check_dim(N)
    if p_x0 is None:
        p_x0 = p0
    if not Q_x0 > 0:
        raise InvalidCoefficients(f"Q(x0) must be positive, got {Q_x0}")
    if not (p0 > 0 and p_x0 > 0):
        raise InvalidCoefficients("p0 and p(x0) must be positive")
    if p0 != p_x0:
        if not allow_p_mismatch:
            raise InvalidCoefficients(
                f"p0={p0} differs from p(x0)={p_x0}; pass allow_p_mismatch=True to override")
        if p0 > p_x0:
            raise InvalidCoefficients("p0 must not exceed p(x0)")
        warnings.warn("threshold computed with p0 != p(x0)", stacklevel=2)
    route = route or ("direct" if N == 3 else "formula")
    sc = sobolev_constants(N, tol, route)
    S, S1 = sc.S, sc.S1
    T = p_x0 / Q_x0 ** (N - 2) * S1 ** (N - 1)
    E = _E(N, p0, p_x0, Q_x0, S, S1)
    E_prime = _E(N, p0 * 2.0 ** (-2.0 / N), p_x0, Q_x0, S, S1)
    rep = ThresholdReport(
        N=int(N), mu=float(mu), p0=p0, p_x0=p_x0, Q_x0=Q_x0, route=route,
        S=S, S1=S1, E=E, E_prime=E_prime,
        M=threshold_M(N, p0, p_x0, Q_x0, S, S1, E),
        M_prime=threshold_M(N, p0, p_x0, Q_x0, S, S1, E_prime),
        trace_threshold=T / (2.0 * (N - 1)),
        interior_threshold=(p0 * S) ** (N / 2.0) / N,
        t0=t_zero(N, p_x0),
        error_estimates={"S": sc.S_err, "S1": sc.S1_err},
    )
    if N >= 4:
        bc = bubble_constants(N, mu, tol)
        A, B, C = bc.A_mu, bc.B_mu, bc.C_mu
        pA, pQC = p_x0 * A, p_x0 * Q_x0 * C
        # Positive root of B l^2 + pQC l - pA = 0 in cancellation-free form.
        l = 2.0 * pA / (pQC + math.sqrt(pQC * pQC + 4.0 * B * pA))
        t_mu = l ** ((N - 2) / 2.0)
        rep.A_mu, rep.B_mu, rep.C_mu = A, B, C
        rep.t_mu = t_mu
        rep.h_at_t_mu = l ** (N - 2) * (pA / N - (N - 2) / (2.0 * N * (N - 1)) * pQC * l)
        rep.error_estimates.update(bc.error_estimates)
    return rep
