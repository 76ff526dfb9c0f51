"""Adaptive one-dimensional quadrature for radial and half-space integrals.

Every N-dimensional integral in the package is reduced by hand to a 1D radial
integral or a 2D iterated one before it reaches this module.  The core is a
globally adaptive Gauss-Kronrod (7/15) bisection scheme; semi-infinite ranges
are mapped onto ``[0, 1)`` with ``r = a + s / (1 - s)``, which keeps algebraic
decay algebraic.

Error estimates are the raw Kronrod/Gauss difference on each subinterval, which
overestimates the Kronrod error on smooth integrands; tolerances are relative
to ``max(1, |value|)``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonConvergence

__all__ = [
    "QuadResult",
    "RadialIntegrand",
    "integrate",
    "integrate_radial",
    "integrate_over_space",
    "iterated_halfspace_integral",
    "sphere_area",
]

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 from each end, plus centre).
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[[9, 11, 13]] = _WG[2::-1]
_GWEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be non-negative")
        if self.evaluations < 1:
            raise ValueError("evaluations must be >= 1")


@dataclass(frozen=True)
class RadialIntegrand:
    """The integrand ``f(r) * r**k`` of a radial reduction in dimension ``N``."""

    f: Callable
    N: int
    k: float = 0.0

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("N must be >= 3")
        if self.k < 0:
            raise ValueError("weight exponent k must be >= 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        val = _eval(self.f, r)
        if self.k == 0:
            return val
        if float(self.k).is_integer():
            return val * r ** int(self.k)
        return val * np.abs(r) ** self.k


def _eval(f, x):
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        y = np.asarray(f(x), dtype=float)
    if y.shape[-1:] != x.shape:
        if y.ndim == 0:
            y = np.full(x.shape, float(y))
        else:
            y = np.array([float(f(xi)) for xi in x])
    return y


def _gk_interval(func, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c + h * _NODES
    fx = func(x)
    if fx.ndim == 1:
        fx = fx[None, :]
    if not np.all(np.isfinite(fx)):
        raise NonConvergence(f"integrand not finite on [{a!r}, {b!r}]")
    k = h * fx @ _KWEIGHTS
    g = h * fx @ _GWEIGHTS
    err = np.abs(k - g)
    # Roundoff floor: below this the Kronrod/Gauss difference is noise.
    floor = 50.0 * _EPS * abs(h) * (np.abs(fx) @ _KWEIGHTS)
    err = np.where(err < floor, floor, err)
    return k, err


def _adaptive(func, a, b, tol, max_depth=40, max_intervals=20000, scale_floor=1.0):
    """Globally adaptive bisection on a finite interval.

    ``func`` maps an array of abscissae to an array of values, or to an
    ``(m, n)`` array for a vector-valued integrand; refinement is steered by
    component 0 only.  Returns ``(values, errors, evaluations)``.
    """
    k, e = _gk_interval(func, a, b)
    evals = 15
    counter = 0
    heap = [(-e[0], counter, a, b, 0, k, e)]
    total = k.copy()
    total_err = e.copy()
    done = []
    while True:
        target = tol * max(scale_floor, abs(total[0]))
        if total_err[0] <= target:
            break
        if not heap:
            raise NonConvergence(
                f"maximum bisection depth {max_depth} reached with error "
                f"{total_err[0]:.3e} > {target:.3e}: integrand too singular")
        if len(heap) + len(done) >= max_intervals:
            raise NonConvergence(
                f"interval budget {max_intervals} exhausted with error "
                f"{total_err[0]:.3e} > {target:.3e}")
        _, _, lo, hi, depth, kk, ee = heapq.heappop(heap)
        if depth >= max_depth:
            done.append((lo, kk, ee))
            continue
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk_interval(func, lo, mid)
        k2, e2 = _gk_interval(func, mid, hi)
        evals += 30
        total = total - kk + k1 + k2
        total_err = total_err - ee + e1 + e2
        for (l_, h_, k_, e_) in ((lo, mid, k1, e1), (mid, hi, k2, e2)):
            counter += 1
            heapq.heappush(heap, (-e_[0], counter, l_, h_, depth + 1, k_, e_))
    # Re-sum in a fixed left-to-right order so the result does not depend on
    # the order refinements were made in.
    pieces = sorted([(item[2], item[5], item[6]) for item in heap] + done, key=lambda p: p[0])
    m = len(total)
    value = np.array([math.fsum(p[1][i] for p in pieces) for i in range(m)])
    err = np.array([math.fsum(p[2][i] for p in pieces) for i in range(m)])
    return value, err, evals


def _mapped(func, lower, upper):
    """Return ``(g, a, b)`` with ``int_lower^upper func = int_a^b g`` on a finite range."""
    if np.isfinite(lower) and np.isfinite(upper):
        return func, lower, upper
    if np.isfinite(lower):
        def g(s):
            x = lower + s / (1.0 - s)
            return func(x) / (1.0 - s) ** 2
        return g, 0.0, 1.0
    if np.isfinite(upper):
        def g(s):
            x = upper - s / (1.0 - s)
            return func(x) / (1.0 - s) ** 2
        return g, 0.0, 1.0
    raise ValueError("doubly infinite range must be split before mapping")


def integrate(func, lower, upper, tol=1e-10, max_depth=40, scale_floor=1.0):
    """Integrate a vectorised scalar ``func`` over ``[lower, upper]``.

    Either limit may be infinite.  The stopping test is
    ``error <= tol * max(scale_floor, |value|)``; ``scale_floor=0`` makes it
    purely relative.  Returns a :class:`QuadResult`.
    """
    vals, errs, n = _integrate_vec(lambda x: _eval(func, x), lower, upper, tol, max_depth,
                                   scale_floor)
    return QuadResult(float(vals[0]), float(errs[0]), n)


def _integrate_vec(func, lower, upper, tol, max_depth=40, scale_floor=1.0):
    if tol <= 0:
        raise ValueError("tol must be positive")
    lower = float(lower)
    upper = float(upper)
    if upper < lower:
        v, e, n = _integrate_vec(func, upper, lower, tol, max_depth, scale_floor)
        return -v, e, n
    if lower == upper:
        probe = np.atleast_2d(func(np.array([lower])))
        z = np.zeros(probe.shape[0])
        return z, z.copy(), 1
    if np.isinf(lower) and np.isinf(upper):
        v1, e1, n1 = _integrate_vec(func, -np.inf, 0.0, tol / 2, max_depth, scale_floor)
        v2, e2, n2 = _integrate_vec(func, 0.0, np.inf, tol / 2, max_depth, scale_floor)
        return v1 + v2, e1 + e2, n1 + n2
    g, a, b = _mapped(func, lower, upper)
    return _adaptive(g, a, b, tol, max_depth=max_depth, scale_floor=scale_floor)


def integrate_radial(integrand: RadialIntegrand, lower: float, upper: float,
                     tol: float = 1e-10, max_depth: int = 40,
                     scale_floor: float = 1.0) -> QuadResult:
    """Integrate ``f(r) r^k`` from ``lower`` to ``upper`` (``upper`` may be ``inf``).

    Raises :class:`NonConvergence` if the refinement budget runs out.
    """
    return integrate(integrand, lower, upper, tol=tol, max_depth=max_depth,
                     scale_floor=scale_floor)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere ``S^dim`` embedded in ``R^(dim+1)``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    half = 0.5 * (dim + 1)
    return 2.0 * math.pi ** half / math.gamma(half)


def integrate_over_space(profile, dim: int, tol: float = 1e-10, lower: float = 0.0) -> QuadResult:
    """``int_{R^dim} profile(|x|) dx`` through the polar reduction."""
    ri = RadialIntegrand(profile, max(dim, 3), k=dim - 1)
    res = integrate_radial(ri, lower, np.inf, tol=tol)
    if dim == 1:
        area = 2.0
    else:
        area = sphere_area(dim - 1)
    return QuadResult(area * res.value, area * res.abs_error_estimate, res.evaluations)


def iterated_halfspace_integral(inner: Callable[[float], RadialIntegrand],
                                outer_weight: Callable,
                                t_lower: float,
                                tol: float = 1e-8,
                                t_upper: float = np.inf,
                                r_lower: float = 0.0,
                                r_upper: float = np.inf,
                                log_outer: bool | None = None,
                                scale_floor: float = 1.0) -> QuadResult:
    """Compute ``int_{t_lower}^{t_upper} w(t) int_{r_lower}^{r_upper} inner(t)(r) dr dt``.

    ``inner(t)`` returns the radial integrand for the slice at ``t``.  On an
    unbounded outer range the substitution ``t = t_b * exp(w)`` is applied,
    with ``t_b = t_lower`` when ``t_lower > 0`` and ``t_b = 1`` otherwise (the
    piece ``[t_lower, 1]`` is then integrated directly).  This keeps slow
    algebraic tails and integrands concentrated near a tiny ``t_lower``
    resolved.  ``log_outer=False`` disables the substitution.

    The reported error adds the outer quadrature error to the outer integral
    of the inner error estimates.  ``scale_floor`` plays the same role as in
    :func:`integrate` for the outer integral.
    """
    if log_outer is None:
        log_outer = bool(np.isinf(t_upper))
    inner_tol = tol / 10.0
    counter = [0]

    def slice_values(t):
        out = np.empty((2, t.size))
        wt = _eval(outer_weight, t)
        for i, ti in enumerate(t):
            res = integrate_radial(inner(float(ti)), r_lower, r_upper, tol=inner_tol,
                                   scale_floor=1e-300)
            counter[0] += res.evaluations
            # 0 * inf only arises from overflow of the weight in the far tail.
            out[0, i] = wt[i] * res.value if res.value != 0.0 else 0.0
            out[1, i] = abs(wt[i]) * res.abs_error_estimate if res.abs_error_estimate != 0.0 else 0.0
        return out

    def log_mapped(t_base):
        def func(w):
            with np.errstate(over="ignore"):
                t = t_base * np.exp(w)
            out = np.zeros((2, w.size))
            # exp overflow only happens deep in the mapped tail, where a
            # convergent integrand has already underflowed.
            ok = np.isfinite(t)
            if np.any(ok):
                vals = slice_values(t[ok])
                with np.errstate(over="ignore", invalid="ignore"):
                    vals = np.where(vals == 0.0, 0.0, vals * t[ok])
                out[:, ok] = vals
            return out
        return func

    # Each piece is (integrand, lo, hi) in its own variable.
    if log_outer and np.isinf(t_upper):
        if t_lower > 0:
            pieces = [(log_mapped(t_lower), 0.0, np.inf)]
        else:
            pieces = [(slice_values, t_lower, 1.0), (log_mapped(1.0), 0.0, np.inf)]
    elif log_outer:
        if not t_lower > 0:
            raise ValueError("log substitution needs t_lower > 0")
        pieces = [(log_mapped(t_lower), 0.0, math.log(t_upper / t_lower))]
    else:
        pieces = [(slice_values, t_lower, t_upper)]

    for attempt in range(2):
        counter[0] = 0
        value = err = 0.0
        n_outer = 0
        for func, lo, hi in pieces:
            vals, errs, n = _integrate_vec(func, lo, hi, tol / (2 * len(pieces)),
                                           scale_floor=scale_floor)
            value += float(vals[0])
            err += float(errs[0] + abs(vals[1]))
            n_outer += n
        if err <= tol * max(scale_floor, abs(value)):
            break
        inner_tol /= 100.0
    else:
        raise NonConvergence(
            f"iterated integral error {err:.3e} exceeds {tol * max(scale_floor, abs(value)):.3e}")
    return QuadResult(value, err, n_outer + counter[0])
