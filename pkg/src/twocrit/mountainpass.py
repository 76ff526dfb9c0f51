"""Discrete mountain-pass search by path deformation.

A path is a chain of nodal fields ``phi_0 = 0, phi_1, ..., phi_K = v``.  Each
sweep moves the interior nodes along the component of ``-grad Phi`` normal
to the path (gradient taken in the ``H^1`` metric) with backtracking, so the
nodes slide down towards a minimum-energy path while the end points stay
fixed.  Nodes are respaced by arclength every few sweeps.  A sweep or a
respacing is accepted only if the peak energy does not rise, so the peak
sequence is monotone and every reported value is an upper bound for the
discrete minimax level.

The highest node is finally polished by Newton's method on ``Phi' = 0``
(the Hessian being indefinite at a saddle, a sparse LU is used).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .bubbles import trace_bubble_rz
from .constants import threshold_report
from .errors import NoNegativeEnd, Stagnation
from .functional import discretize, maximize_ray
from .mesh import AxisymMesh, DiscreteField
from .problem import ProblemInstance, eval_field

__all__ = [
    "PathState",
    "SolverConfig",
    "SolverReport",
    "VerifyReport",
    "make_endpoint",
    "sign_change_t",
    "straight_path",
    "bent_path",
    "minimax_solve",
    "path_peak",
    "verify_solution",
    "mountain_pass_floor",
    "threshold_for",
]

BELOW = "below_threshold"
ABOVE = "at_or_above"
INCONCLUSIVE = "inconclusive"


def _vals(u):
    return u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)


@dataclass
class PathState:
    nodes: list
    energies: np.ndarray

    def __post_init__(self):
        self.nodes = [np.array(_vals(n), dtype=float) for n in self.nodes]
        self.energies = np.asarray(self.energies, dtype=float)
        if len(self.nodes) < 3:
            raise ValueError("a path needs at least three nodes")
        if np.any(self.nodes[0] != 0):
            raise ValueError("the path must start at 0")
        if self.energies[-1] > 0:
            raise ValueError("the path must end where the energy is non-positive")

    @classmethod
    def from_nodes(cls, nodes, inst, mesh):
        disc = discretize(mesh, inst)
        return cls(nodes, [disc.energy(n) for n in nodes])

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.energies))   # lowest index among ties

    @property
    def peak_value(self) -> float:
        return float(self.energies.max())


def sign_change_t(fun, t_star: float, t_max: float) -> float:
    """Smallest ``t > t_star`` with ``fun(t) = 0``, given ``fun(t_star) > 0 > fun(t_max)``."""
    if not fun(t_max) < 0:
        raise NoNegativeEnd("energy not negative at the end of the bracket")
    return brentq(fun, t_star, t_max, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def make_endpoint(inst: ProblemInstance, mesh: AxisymMesh, bubble_params: dict | None = None,
                  return_profile: bool = False):
    """Endpoint ``v = t W_eps`` with ``Phi(v) < 0``.

    ``bubble_params`` keys: ``epsilon`` (0.1), ``R`` (cutoff radius, default
    the domain radius), ``gamma`` (1), ``factor`` (1.5: ``t`` is this multiple
    of the ray argmax), ``t_max`` (initial ray length, doubled on demand).
    """
    bp = {"epsilon": 0.1, "R": mesh.R_dom, "gamma": 1.0, "factor": 1.5, "t_max": 4.0}
    bp.update(bubble_params or {})
    disc = discretize(mesh, inst)
    W = DiscreteField.interpolate(mesh, lambda r, z: trace_bubble_rz(bp["epsilon"], r, z, bp["R"], bp["gamma"]))
    w = W.values

    def phi(t):
        return disc.energy(t * w)

    T = float(bp["t_max"])
    for _ in range(30):
        try:
            prof = maximize_ray(phi, np.linspace(0.0, T, 201))
            break
        except NoNegativeEnd:
            T *= 2.0
    else:
        raise NoNegativeEnd("energy stays non-negative along the bubble ray")
    t_end = bp["factor"] * prof.t_star
    while phi(t_end) >= 0:
        t_end *= 1.25
        if t_end > 2 ** 30 * T:
            raise NoNegativeEnd("no negative endpoint found along the bubble ray")
    v = DiscreteField(mesh, t_end * w)
    return (v, prof) if return_profile else v


def straight_path(v, K: int):
    """``K+1`` equally spaced nodes on the segment from 0 to ``v``."""
    v = _vals(v)
    return [s * v for s in np.linspace(0.0, 1.0, K + 1)]


def bent_path(v, w, K: int, amplitude: float = 1.0):
    """Nodes of ``s v + amplitude sin(pi s) w``: same end points, different route."""
    v, w = _vals(v), _vals(w)
    return [s * v + amplitude * math.sin(math.pi * s) * w for s in np.linspace(0.0, 1.0, K + 1)]


@dataclass
class SolverConfig:
    K: int = 12
    step: float = 1.0
    max_iter: int = 400
    tau: float = 1e-7
    reparam_every: int = 10
    patience: int = 40
    stall_rtol: float = 1e-10
    newton_max: int = 40
    margin: float = 1e-3


@dataclass
class SolverReport:
    c_estimate: float
    peak_history: list
    grad_dual_norm_history: list
    threshold: float
    margin: float
    verdict: str
    iterations: int
    status: str
    critical_point: DiscreteField | None = None
    critical_value: float | None = None
    residual: float | None = None
    nontrivial: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "c_estimate": self.c_estimate,
            "peak_history": list(map(float, self.peak_history)),
            "grad_dual_norm_history": list(map(float, self.grad_dual_norm_history)),
            "threshold": self.threshold,
            "margin": self.margin,
            "verdict": self.verdict,
            "iterations": self.iterations,
            "status": self.status,
            "critical_value": self.critical_value,
            "residual": self.residual,
            "nontrivial": self.nontrivial,
            "critical_point": None if self.critical_point is None else self.critical_point.values.tolist(),
        }
        d.update(self.extra)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def iteration_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "peak_value", "grad_norm"])
        for i, (pv, gn) in enumerate(zip(self.peak_history, self.grad_dual_norm_history)):
            w.writerow([i, repr(float(pv)), repr(float(gn))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def threshold_for(inst: ProblemInstance, x0=(0.0, 0.0)) -> float:
    """Compactness level for the concentration point ``x0 = (rho, z)``.

    ``beta = 0`` gives the trace level ``p S1^{N-1} / (2 (N-1) Q^{N-2})``; any
    other ``beta`` gives ``M(S, S1)`` with ``p0 = p(x0)``.
    """
    p0 = float(eval_field(inst.p, np.array([x0[0]]), np.array([x0[1]]))[0])
    q0 = float(eval_field(inst.Q, np.array([x0[0]]), np.array([x0[1]]))[0])
    rep = threshold_report(inst.N, p0=p0, Q_x0=q0)
    return rep.trace_threshold if inst.beta == 0 else rep.M


def _reparametrize(disc, nodes):
    """Respace nodes at equal ``H^1`` arclength by piecewise-linear interpolation."""
    seg = np.array([disc.norm(nodes[i + 1] - nodes[i]) for i in range(len(nodes) - 1)])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return nodes
    s /= s[-1]
    target = np.linspace(0.0, 1.0, len(nodes))
    out = [nodes[0]]
    for st in target[1:-1]:
        j = min(int(np.searchsorted(s, st, side="right")) - 1, len(nodes) - 2)
        lam = (st - s[j]) / (s[j + 1] - s[j]) if s[j + 1] > s[j] else 0.0
        out.append((1 - lam) * nodes[j] + lam * nodes[j + 1])
    out.append(nodes[-1])
    return out


def _newton(disc, u, tau, max_iter):
    u = u.copy()
    _, nrm = disc.gradient(u)
    scale = max(1.0, disc.norm(u))
    for _ in range(max_iter):
        if nrm < tau * scale:
            break
        d = disc.derivative(u)
        try:
            du = spla.splu(disc.hessian(u)).solve(-d)
        except RuntimeError:
            break
        lam = 1.0
        while lam > 1e-4:
            cand = u + lam * du
            _, n2 = disc.gradient(cand)
            if n2 < nrm:
                u, nrm = cand, n2
                break
            lam *= 0.5
        else:
            break
        scale = max(1.0, disc.norm(u))
    return u, nrm


_END = np.geomspace(1e-5, 0.25, 14)
_SEG_GRID = np.unique(np.concatenate([np.linspace(0.0, 1.0, 17), _END, 1.0 - _END]))


def _segment_sup(disc, a, b, rtol=1e-7):
    """Maximum of ``Phi`` on the segment ``[a, b]`` and the parameter where it is attained.

    The sampling grid is clustered at both ends, where a ray through a
    concentrated field peaks.
    """
    s = _SEG_GRID
    n = len(s) - 1
    diff = b - a
    vals = np.array([disc.energy(a + si * diff) for si in s])
    k = int(np.argmax(vals))
    if k in (0, n):
        return float(vals[k]), float(s[k])
    lo, hi = s[k - 1], s[k + 1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = disc.energy(a + c * diff), disc.energy(a + d * diff)
    while hi - lo > rtol * max(hi, 1e-12):
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = disc.energy(a + c * diff)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = disc.energy(a + d * diff)
    sm = 0.5 * (lo + hi)
    fm = disc.energy(a + sm * diff)
    if vals[k] >= fm:
        return float(vals[k]), float(s[k])
    return float(fm), float(sm)


def path_peak(disc, nodes):
    """Maximum of ``Phi`` over the piecewise-linear path through ``nodes``.

    Returns ``(value, point)``.  Ties are resolved towards the start of the path.
    """
    best, arg = -math.inf, None
    for i in range(len(nodes) - 1):
        v, s = _segment_sup(disc, nodes[i], nodes[i + 1])
        if not math.isfinite(v):
            return math.inf, nodes[i]
        if v > best:
            best, arg = v, nodes[i] + s * (nodes[i + 1] - nodes[i])
    return best, arg


def minimax_solve(inst: ProblemInstance, mesh: AxisymMesh, path0: PathState, cfg: SolverConfig | None = None,
                  threshold: float | None = None, raise_on_stagnation: bool = False) -> SolverReport:
    """Deform ``path0`` to lower its peak; return the peak value and a polished critical point.

    The peak is the maximum of ``Phi`` over the whole piecewise-linear path,
    not only over its nodes, so ``c_estimate`` is an upper bound for the
    discrete minimax level.  ``verdict`` compares it with ``threshold``
    (default :func:`threshold_for`) using ``cfg.margin``.  ``status`` is
    ``converged``, ``stalled`` (no decrease over ``cfg.patience`` sweeps or
    no acceptable step) or ``max_iter``; with ``raise_on_stagnation`` the
    last two raise :class:`Stagnation` instead.
    """
    cfg = cfg or SolverConfig()
    disc = discretize(mesh, inst)
    if threshold is None:
        threshold = threshold_for(inst)
    nodes = [n.copy() for n in path0.nodes]
    if disc.energy(nodes[-1]) > 0:
        raise NoNegativeEnd("path endpoint has positive energy")
    nodes = _reparametrize(disc, nodes)
    peak, top = path_peak(disc, nodes)
    initial_peak = peak
    peaks = [peak]
    gnorms = [disc.gradient(top)[1]]
    h = cfg.step
    status = "max_iter"
    it = 0

    def perp_grads(nodes):
        out = []
        for i in range(1, len(nodes) - 1):
            r, _ = disc.gradient(nodes[i])
            t = nodes[i + 1] - nodes[i - 1]
            tn = disc.norm(t)
            if tn > 0:
                t = t / tn
                r = r - disc.inner(r, t) * t
            out.append(r)
        return out

    for it in range(1, cfg.max_iter + 1):
        grads = perp_grads(nodes)
        max_perp = max(disc.norm(r) for r in grads)
        if max_perp < cfg.tau or gnorms[-1] < cfg.tau:
            status = "converged"
            break
        # Cap each displacement at half the node spacing so the string stays coherent.
        ds = sum(disc.norm(nodes[i + 1] - nodes[i]) for i in range(len(nodes) - 1)) / (len(nodes) - 1)
        rn = [disc.norm(r) for r in grads]
        accepted = False
        while h > 1e-12:
            trial = [nodes[0]]
            for n, r, nr in zip(nodes[1:-1], grads, rn):
                trial.append(n - min(h, 0.5 * ds / max(nr, 1e-300)) * r)
            trial.append(nodes[-1])
            if all(np.all(np.isfinite(n)) for n in trial):
                trial = _reparametrize(disc, trial)
                tp, ttop = path_peak(disc, trial)
                if tp <= peak:
                    accepted = True
                    break
            h *= 0.5
        if not accepted:
            status = "stalled"
            break
        nodes, peak, top = trial, tp, ttop
        h = min(2.0 * h, 1e2 * cfg.step)
        peaks.append(peak)
        gnorms.append(disc.gradient(top)[1])
        if it > cfg.patience and peaks[-cfg.patience - 1] - peak <= cfg.stall_rtol * max(1.0, abs(peak)):
            status = "stalled"
            break

    crit, nrm = _newton(disc, top, cfg.tau, cfg.newton_max)
    scale = max(1.0, disc.norm(crit))
    ver = verify_solution(crit, inst, mesh)
    crit_value = disc.energy(crit)
    polished = nrm < cfg.tau * scale and ver.nontrivial \
        and abs(crit_value - peak) <= 1e-2 * max(abs(peak), 1e-12)
    if status != "converged" and polished:
        status = "converged"
    if status != "converged" and raise_on_stagnation:
        raise Stagnation(f"peak stopped decreasing after {it} sweeps")

    # The peak of an admissible path bounds the minimax level from above, so a
    # low peak certifies "below" even when the deformation stalled.  Being
    # above needs a converged saddle.
    c = float(peak)
    if c < threshold - cfg.margin:
        verdict = BELOW
    elif status == "converged" and c > threshold + cfg.margin:
        verdict = ABOVE
    else:
        verdict = INCONCLUSIVE
    return SolverReport(
        c_estimate=c, peak_history=peaks, grad_dual_norm_history=gnorms, threshold=float(threshold),
        margin=cfg.margin, verdict=verdict, iterations=it, status=status,
        critical_point=DiscreteField(mesh, crit), critical_value=float(crit_value),
        residual=ver.residual, nontrivial=ver.nontrivial,
        extra={"initial_peak": float(initial_peak), "newton_dual_norm": float(nrm),
               "node_energies": [float(disc.energy(n)) for n in nodes]},
    )


@dataclass
class VerifyReport:
    residual: float
    dual_norm: float
    weak_defect: float
    nontrivial: bool


def verify_solution(u, inst: ProblemInstance, mesh: AxisymMesh, scale: float = 1.0) -> VerifyReport:
    """Weak-form residual of the Euler-Lagrange equation at ``u``.

    ``residual = ||Phi'(u)||_* + max_i |Phi'(u) phi_i| / ||phi_i||`` over the
    hat functions ``phi_i``.  ``nontrivial`` is ``max |u| > 1e-8 * scale``.
    """
    disc = discretize(mesh, inst)
    uv = _vals(u)
    d = disc.derivative(uv)
    r = disc.riesz(d)
    dual = math.sqrt(max(float(d @ r), 0.0))
    hat_norm = np.sqrt((disc.K + disc.M).diagonal())
    weak = float(np.max(np.abs(d) / hat_norm))
    return VerifyReport(dual + weak, dual, weak, bool(np.max(np.abs(uv)) > 1e-8 * scale))


def _smooth_directions(disc, n, rng):
    out = []
    for _ in range(n):
        noise = rng.standard_normal(disc.mesh.n_vertices)
        s = disc.riesz(disc.M @ noise)
        out.append(s / disc.norm(s))
    ones = np.ones(disc.mesh.n_vertices)
    out.append(ones / disc.norm(ones))
    return out


def mountain_pass_floor(inst: ProblemInstance, mesh: AxisymMesh, alphas=None, n_samples: int = 32,
                        seed: int = 0, extra_directions=()):
    """Sampled minimum of ``Phi`` on ``H^1`` spheres of radius ``alpha``.

    Returns ``(alpha, rho)`` for the radius with the largest sampled minimum
    ``rho``.  Sampling can only overestimate the infimum over a sphere, so
    ``rho`` is a diagnostic: ``rho <= 0`` means a descent direction was found.
    """
    disc = discretize(mesh, inst)
    rng = np.random.default_rng(seed)
    dirs = _smooth_directions(disc, n_samples, rng)
    for e in extra_directions:
        e = _vals(e)
        dirs.append(e / disc.norm(e))
    if alphas is None:
        alphas = np.geomspace(1e-3, 1.0, 25)
    best = (float(alphas[0]), -math.inf)
    for a in alphas:
        m = min(disc.energy(a * d) for d in dirs)
        if m > best[1]:
            best = (float(a), float(m))
    return best
