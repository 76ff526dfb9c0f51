"""Perturbations ``f(x,u) = a(x) u + g(x,u)``, growth checks, and the small-epsilon limit classifier.

The classifier evaluates, on a dyadic sweep ``eps = 2^-k``, the rescaled
integrals of the primitive ``G`` against the bubble profile that decide
whether a perturbation lowers the ray energy enough:

``"trace_infinity"``, ``"trace_zero"``
    For ``N >= 4``

    ``eps^{(N-2)/2} int_{sqrt(eps)}^inf t^{N-1} int_0^inf G(t^{-(N-2)} (1+r^2)^{-(N-2)/2}) r^{N-2} dr dt``

    and for ``N = 3`` the same integral with prefactor ``eps^{1/2}/|ln eps|``.
    The first id asks for the limit ``+inf``, the second for ``0``.
``"double_zero"``
    For ``N >= 4``

    ``eps^{N-1} int_{mu/(N-2)}^inf (1+t^2)^{(N-1)/2} int_0^inf G(eps^{-(N-2)/2} (1+t^2)^{-(N-2)/2} (1+r^2)^{-(N-2)/2}) r^{N-2} dr dt``

    and for ``N = 3`` the analogue with prefactor ``eps^2/|ln eps|``.  The
    required limit is ``0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import critical_exponents
from .errors import NonConvergence
from .quadrature import RadialIntegrand, integrate, iterated_halfspace_integral

__all__ = [
    "Perturbation",
    "ConditionVerdict",
    "GrowthReport",
    "CONDITIONS",
    "make_builtin",
    "builtin_perturbations",
    "check_growth",
    "condition_value",
    "classify_condition",
    "trend_classification",
    "first_eigenvalue_condition",
]

DIVERGES = "diverges_to_infinity"
ZERO = "tends_to_zero"
INDETERMINATE = "indeterminate"

# condition id -> (integral family, required limit)
CONDITIONS = {
    "trace_infinity": ("trace", DIVERGES),
    "trace_zero": ("trace", ZERO),
    "double_zero": ("double", ZERO),
}


@dataclass
class Perturbation:
    """Lower envelope ``g(u)`` of the perturbation with its primitive ``G``.

    ``g`` and ``G`` must accept numpy arrays.  ``a`` is the linear coefficient
    (a constant or a callable of the model coordinates ``(rho, z)``).
    ``positive_only`` marks nonlinearities that are only defined for ``u > 0``.
    """

    name: str
    g: Callable
    G: Callable
    a: float | Callable = 0.0
    r: float | None = None
    alpha: float | None = None
    positive_only: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.G is None:
            g = self.g

            def G(u):
                u = np.atleast_1d(np.asarray(u, dtype=float))
                return np.array([integrate(g, 0.0, float(ui), tol=1e-12).value for ui in u.ravel()]).reshape(u.shape)
            self.G = G
        g0 = float(np.asarray(self.G(np.array([0.0])))[0])
        if g0 != 0.0:
            raise ValueError(f"G(0) must vanish, got {g0}")

    def g_x(self, x, u):
        """``g(x, u)``; builtins do not depend on ``x``."""
        return self.g(u)

    def F(self, u, a_val=None):
        """Primitive of ``f``: ``a u^2 / 2 + G(u)``."""
        a = self.a if a_val is None else a_val
        u = np.asarray(u, dtype=float)
        return 0.5 * a * u * u + self.G(u)

    def scaled(self, c):
        """The perturbation ``c*g`` (primitive ``c*G``)."""
        g, G = self.g, self.G
        return Perturbation(f"{c}*{self.name}", lambda u: c * g(u), lambda u: c * G(u),
                            self.a, self.r, self.alpha, self.positive_only, dict(self.params))


def _power(mu=1.0, r=3.0):
    def g(u):
        u = np.asarray(u, dtype=float)
        return mu * np.abs(u) ** (r - 2) * u

    def G(u):
        u = np.asarray(u, dtype=float)
        return mu * np.abs(u) ** r / r

    return Perturbation("power", g, G, r=r, alpha=r if mu > 0 else None, params={"mu": mu, "r": r})


def _log_power(gamma=0.5, N=None):
    k = 3.0 + gamma

    def g(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)
            v = k * a ** (2 + gamma) * np.abs(lg) + a ** (2 + gamma)
        return np.sign(u) * v

    def G(u):
        a = np.abs(np.asarray(u, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(np.where(a > 0, a, 1.0))
        ak = a ** k
        return np.where(a < 1.0, -ak * lg + 2.0 * ak / k, ak * lg + 2.0 / k)

    r = None
    if N is not None:
        r = 0.5 * (k + float(critical_exponents(N).two_star))
    return Perturbation("log_power", g, G, r=r, params={"gamma": gamma})


def _rational(sign=1.0):
    def g(u):
        a = np.abs(np.asarray(u, dtype=float))
        return sign * 2.5 * (a ** 1.5 + a ** 3.5) / (1.0 + 5.0 * a * a) ** 2

    def G(u):
        u = np.asarray(u, dtype=float)
        return sign * np.sign(u) * np.abs(u) ** 2.5 / (1.0 + 5.0 * u * u)

    return Perturbation("rational", g, G, params={"sign": sign})


def _critical_log(N=4):
    q = float(critical_exponents(N).two_sub)

    def g(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(u)
            v = u ** (q - 1) * (q * lg - 1.0) / lg ** 2
        return np.where(u > 0, v, 0.0)

    def G(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = u ** q / np.log(u)
        return np.where(u > 0, v, 0.0)

    return Perturbation("critical_log", g, G, positive_only=True, params={"N": N})


_BUILTINS = {"power": _power, "log_power": _log_power, "rational": _rational, "critical_log": _critical_log}


def make_builtin(name: str, **params) -> Perturbation:
    """Named perturbation: ``"power"`` (mu, r), ``"log_power"`` (gamma, N), ``"rational"`` (sign), ``"critical_log"`` (N)."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin {name!r}; choose from {sorted(_BUILTINS)}") from None
    return factory(**params)


def builtin_perturbations() -> dict:
    """Catalog of builtins with default parameters."""
    return {name: f() for name, f in _BUILTINS.items()}


# --------------------------------------------------------------------------- growth


@dataclass
class GrowthReport:
    small_u: str
    large_u: dict
    ar_condition: bool | None
    satisfies: list
    failures: list

    def to_dict(self):
        return {"small_u": self.small_u, "large_u": self.large_u, "ar_condition": self.ar_condition,
                "satisfies": self.satisfies, "failures": self.failures}


def _slope_verdict(u, ratio, tol=0.02):
    """Trend of ``ratio`` along ``u``: ``"zero"``, ``"bounded"``, ``"unbounded"`` or ``"inconclusive"``.

    Based on the least-squares slope of ``ln ratio`` against ``ln u`` over
    the grid tail, oriented so that a negative slope means decay along the grid.
    """
    if np.all(ratio == 0):
        return "zero"
    if np.any(ratio == 0) or not np.all(np.isfinite(ratio)):
        return "inconclusive"
    x = np.log(u[-8:])
    y = np.log(ratio[-8:])
    s = np.polyfit(x, y, 1)[0] * np.sign(x[-1] - x[0])
    if s < -tol:
        return "zero"
    if s <= tol:
        return "bounded"
    if s > 5 * tol:
        return "unbounded"
    return "inconclusive"


def check_growth(p: Perturbation, N: int) -> GrowthReport:
    """Numerical check of the small- and large-``u`` growth hypotheses on ``g``.

    Three hypothesis sets are reported by name:

    * ``trace_critical``: ``|g| = o(|u|)`` at 0 and ``|g| = O(|u|^{2_*-1})`` at infinity;
    * ``trace_supercritical``: ``|g| = o(|u|)`` at 0 and ``|g| = O(|u|^{r-1})`` at infinity with ``2_* < r < 2^*``;
    * ``double_critical``: ``|g| = o(|u|)`` at 0 and ``|g| = o(|u|^{2^*-1})`` at infinity.
    """
    e = critical_exponents(N)
    ts, tb = float(e.two_star), float(e.two_sub)
    small = np.logspace(-1, -12, 23)
    large = np.logspace(1, 12, 23)

    def ratio(u, q):
        vals = [np.abs(p.g(u))]
        if not p.positive_only:
            vals.append(np.abs(p.g(-u)))
        with np.errstate(over="ignore", invalid="ignore"):
            return np.max(vals, axis=0) / u ** (q - 1)

    small_v = _slope_verdict(small, ratio(small, 2.0))
    qs = {"two_sub": tb, "two_star": ts}
    if p.r is not None:
        qs["r"] = p.r
    large_v = {name: _slope_verdict(large, ratio(large, q)) for name, q in qs.items()}

    ar = None
    if p.alpha is not None:
        u = np.concatenate([-np.logspace(-6, 3, 200), np.logspace(-6, 3, 200)])
        if p.positive_only:
            u = u[u > 0]
        lhs = p.alpha * p.G(u)
        rhs = u * p.g(u)
        ar = bool(np.all(lhs <= rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))))

    failures = []
    small_ok = small_v == "zero"
    if not small_ok:
        failures.append("o(|u|) as u -> 0")
    tc_ok = large_v["two_sub"] in ("zero", "bounded")
    if not tc_ok:
        failures.append("O(|u|^(2_*-1)) as |u| -> inf")
    ts_ok = False
    if p.r is not None:
        in_range = tb < p.r < ts
        if not in_range:
            failures.append("2_* < r < 2^*")
        bounded = large_v["r"] in ("zero", "bounded")
        if not bounded:
            failures.append("O(|u|^(r-1)) as |u| -> inf")
        ts_ok = in_range and bounded
    dc_ok = large_v["two_star"] == "zero"
    if not dc_ok:
        failures.append("o(|u|^(2^*-1)) as |u| -> inf")
    if ar is False:
        failures.append("alpha G <= u g")
    satisfies = []
    if small_ok and ar is not False:
        if tc_ok:
            satisfies.append("trace_critical")
        if ts_ok:
            satisfies.append("trace_supercritical")
    if small_ok and dc_ok:
        satisfies.append("double_critical")
    return GrowthReport(small_v, large_v, ar, satisfies, failures)


# --------------------------------------------------------------------------- classifier


@dataclass
class ConditionVerdict:
    condition_id: str
    N: int
    classification: str
    evidence: list
    satisfied: bool
    curvature_sign: int | None = None

    @property
    def matches(self):
        """Which requirement the observed limit fulfils: ``"infinity"``, ``"zero"`` or ``None``."""
        return {DIVERGES: "infinity", ZERO: "zero"}.get(self.classification)

    def to_dict(self):
        return {"condition_id": self.condition_id, "N": self.N, "classification": self.classification,
                "evidence": [list(map(float, e)) for e in self.evidence], "satisfied": self.satisfied,
                "matches": self.matches, "curvature_sign": self.curvature_sign}


def condition_value(G: Callable, N: int, family: str, eps: float, mu: float = 0.0, tol: float = 1e-8) -> float:
    """One evidence value of the ``trace`` or ``double`` family at ``eps``."""
    k = (N - 2) / 2.0
    if family == "trace":
        def inner(t):
            c = t ** (-(N - 2))
            return RadialIntegrand(lambda r: G(c * (1.0 + r * r) ** (-k)), N, N - 2)
        res = iterated_halfspace_integral(inner, lambda t: t ** (N - 1), math.sqrt(eps), tol,
                                          scale_floor=1e-300)
        pref = eps ** 0.5 / abs(math.log(eps)) if N == 3 else eps ** k
    elif family == "double":
        c0 = eps ** (-k)

        def inner(t):
            c = c0 * (1.0 + t * t) ** (-k)
            return RadialIntegrand(lambda r: G(c * (1.0 + r * r) ** (-k)), N, N - 2)
        res = iterated_halfspace_integral(inner, lambda t: (1.0 + t * t) ** ((N - 1) / 2.0), mu / (N - 2), tol,
                                          scale_floor=1e-300)
        pref = eps ** 2 / abs(math.log(eps)) if N == 3 else eps ** (N - 1)
    else:
        raise ValueError(f"unknown family {family!r}")
    return pref * res.value


def trend_classification(evidence, min_points: int = 4, slope_min: float = 0.05, drop: float = 1e-3) -> str:
    """Decide a limit from ``(eps, value)`` pairs ordered by decreasing ``eps``.

    * ``diverges_to_infinity``: the last ``min_points`` values grow strictly in
      modulus, keep one sign, and every consecutive log-log slope
      ``d ln|v| / d ln eps`` is at most ``-slope_min``.
    * ``tends_to_zero``: every value is exactly zero, or the last
      ``min_points`` moduli decrease strictly and the final one is below
      ``drop`` times the first value of the sweep.
    """
    if len(evidence) < min_points:
        return INDETERMINATE
    eps = np.array([e for e, _ in evidence], dtype=float)
    v = np.array([x for _, x in evidence], dtype=float)
    if np.all(v == 0):
        return ZERO
    tail_e, tail_v = eps[-min_points:], v[-min_points:]
    a = np.abs(tail_v)
    if np.all(a > 0) and np.all(np.sign(tail_v) == np.sign(tail_v[0])):
        slopes = np.diff(np.log(a)) / np.diff(np.log(tail_e))
        if np.all(np.diff(a) > 0) and np.all(slopes <= -slope_min):
            return DIVERGES
        if np.all(np.diff(a) < 0) and a[-1] <= drop * abs(v[0]):
            return ZERO
    return INDETERMINATE


def classify_condition(p: Perturbation | Callable, N: int, condition_id: str, mu: float = 0.0,
                       k_max: int = 60, k_min: int = 1, tol: float = 1e-8,
                       curvature_sign: int | None = None) -> ConditionVerdict:
    """Sweep ``eps = 2^-k`` for ``k = k_min..k_max`` and classify the limit.

    Stops as soon as :func:`trend_classification` is conclusive.  ``p`` can be a
    :class:`Perturbation` or a bare primitive ``G``.  ``curvature_sign`` is
    user metadata (the sign of the boundary mean curvature at the
    concentration point) and does not influence the result.
    """
    try:
        family, target = CONDITIONS[condition_id]
    except KeyError:
        raise ValueError(f"unknown condition {condition_id!r}; choose from {sorted(CONDITIONS)}") from None
    if N < 3:
        critical_exponents(N)
    G = p.G if isinstance(p, Perturbation) else p
    evidence = []
    verdict = INDETERMINATE
    for k in range(k_min, k_max + 1):
        eps = 2.0 ** (-k)
        val = condition_value(G, N, family, eps, mu, tol)
        if not math.isfinite(val):
            raise NonConvergence(f"condition value not finite at eps=2^-{k}")
        evidence.append((eps, val))
        verdict = trend_classification(evidence)
        if verdict != INDETERMINATE:
            break
    return ConditionVerdict(condition_id, int(N), verdict, evidence, verdict == target, curvature_sign)


def first_eigenvalue_condition(a, p, mesh, weighted: bool = False):
    """Smallest Neumann eigenvalue of ``-Lap - a`` (or ``-div(p grad) - a``) and whether it is positive.

    Returns ``(lambda1, positive)``.
    """
    from .functional import first_eigenvalue

    lam, _ = first_eigenvalue(p, a, mesh, weighted=weighted)
    return lam, bool(lam > 1e-8)
