"""``twocrit`` command line.

Every subcommand reads a JSON problem file, writes ``report.json`` (sorted
keys, so identical inputs give identical bytes) plus CSV tables into
``--out``, and exits with 0 (ok), 2 (bad config), 3 (numerical
non-convergence) or 4 (inconclusive verdict).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bubbles import NeumannBubble, limit_problem_residual, trace_bubble_energy, trace_bubble_rz
from .config import build_domain_mesh, build_instance, load_config, validate_report
from .constants import threshold_report
from .errors import (ConfigError, DimensionNotSupported, DimensionTooSmall, InvalidCoefficients,
                     MeshGenerationFailure, NoNegativeEnd, NonConvergence, SingularGram, Stagnation)
from .expr import SPATIAL_VARS, compile_expr
from .functional import discretize, maximize_ray
from .mesh import DiscreteField
from .mountainpass import (INCONCLUSIVE, PathState, SolverConfig, make_endpoint, minimax_solve,
                           mountain_pass_floor, straight_path, threshold_for)
from .nonlinearity import CONDITIONS, Perturbation, check_growth, classify_condition, first_eigenvalue_condition

EXIT_OK, EXIT_CONFIG, EXIT_NONCONV, EXIT_INCONCLUSIVE = 0, 2, 3, 4

EXPAND_HEADER = ["epsilon", "sup", "gap"]
CONDITIONS_HEADER = ["condition_id", "N", "classification", "satisfied", "points", "last_epsilon", "last_value"]


def _at_origin(expr_value):
    f = compile_expr(expr_value, SPATIAL_VARS) if not callable(expr_value) else expr_value
    if callable(f):
        return float(np.asarray(f(np.array([0.0]), np.array([0.0])))[0])
    return float(f)


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise AssertionError("row width does not match header")
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


# --------------------------------------------------------------------------- commands


def cmd_constants(cfg, args):
    N = cfg["N"]
    p0 = _at_origin(cfg["p"])
    q0 = _at_origin(cfg["Q"])
    mu = float(cfg["bubble"]["mu"])
    rep = threshold_report(N, p0=p0, Q_x0=q0, mu=mu, tol=args.tol)
    result = rep.to_dict()
    if N == 3:
        msg = ("N=3: the bubble constants A_mu, C_mu diverge in three dimensions, so S and S1 come "
               "from directly quadratured quotients and t_mu is not reported")
        result["bubble_constants"] = {"refused": msg}
        print(msg, file=sys.stderr)
    print(f"M={rep.M:.12g} trace_threshold={rep.trace_threshold:.12g} "
          f"interior_threshold={rep.interior_threshold:.12g} chain_holds={rep.chain_holds}")
    return result, {}, "ok"


def _bubble_field(mesh, eps):
    return DiscreteField.interpolate(mesh, lambda r, z: trace_bubble_rz(eps, r, z, mesh.R_dom)).values


def cmd_expand(cfg, args):
    _need_fem(cfg)
    inst = build_instance(cfg)
    mesh = build_domain_mesh(cfg)
    disc = discretize(mesh, inst)
    thr = threshold_for(inst)
    rows = []
    for eps in cfg["bubble"]["epsilon_list"]:
        w = _bubble_field(mesh, eps)
        T = 4.0
        for _ in range(30):
            try:
                prof = maximize_ray(lambda t: disc.energy(t * w), np.linspace(0.0, T, 201), rtol=args.tol)
                break
            except NoNegativeEnd:
                T *= 2.0
        else:
            raise NoNegativeEnd(f"energy non-negative along the ray at eps={eps}")
        rows.append([float(eps), prof.sup, thr - prof.sup])
        print(f"eps={eps:g} sup={prof.sup:.10g} gap={thr - prof.sup:.10g}")
    result = {"threshold": thr, "rows": rows, "n_vertices": mesh.n_vertices}
    return result, {"expand.csv": _csv(rows, EXPAND_HEADER)}, "ok"


def _perturbation(inst):
    if inst.g is not None:
        return inst.g
    return Perturbation("zero", lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                        lambda u: np.zeros_like(np.asarray(u, dtype=float)))


def cmd_conditions(cfg, args):
    N = cfg["N"]
    inst = build_instance(cfg)
    pert = _perturbation(inst)
    growth = check_growth(pert, N)
    ids = cfg.get("conditions") or sorted(CONDITIONS)
    mu = float(cfg["bubble"]["mu"])
    verdicts, rows = [], []
    for cid in ids:
        v = classify_condition(pert, N, cid, mu=mu, tol=min(args.tol, 1e-8))
        verdicts.append(v.to_dict())
        last = v.evidence[-1]
        rows.append([cid, N, v.classification, v.satisfied, len(v.evidence), last[0], last[1]])
        print(f"{cid}: {v.classification} (satisfied={v.satisfied})")
    print("growth:", "passes" if not growth.failures else "fails: " + "; ".join(growth.failures))
    result = {"growth": _jsonable(vars(growth)), "verdicts": verdicts}
    conclusive = all(v["matches"] is not None for v in verdicts)
    return result, {"conditions.csv": _csv(rows, CONDITIONS_HEADER)}, "ok" if conclusive else "inconclusive"


def cmd_eigen(cfg, args):
    _need_fem(cfg)
    inst = build_instance(cfg)
    mesh = build_domain_mesh(cfg)
    lam, positive = first_eigenvalue_condition(inst.a, inst.p, mesh)
    print(f"lambda1={lam:.12g} positive={positive}")
    if not positive:
        print("lambda1(a) is not positive: norm equivalence fails for this a", file=sys.stderr)
    return {"lambda1": lam, "positive": positive, "n_vertices": mesh.n_vertices}, {}, "ok"


def cmd_solve(cfg, args):
    _need_fem(cfg)
    inst = build_instance(cfg)
    mesh = build_domain_mesh(cfg)
    sc = cfg["solver"]
    scfg = SolverConfig(K=sc["K"], tau=sc["tau"], max_iter=sc["max_iter"], step=sc["step"], margin=sc["margin"])
    eps = cfg["bubble"]["epsilon_list"][-1]
    v, prof = make_endpoint(inst, mesh, {"epsilon": eps}, return_profile=True)
    path0 = PathState.from_nodes(straight_path(v, scfg.K), inst, mesh)
    rep = minimax_solve(inst, mesh, path0, scfg)
    alpha, rho = mountain_pass_floor(inst, mesh, n_samples=16, seed=args.seed)
    result = rep.to_dict()
    result.update({"ray_sup": prof.sup, "epsilon": eps, "floor_alpha": alpha, "floor_rho": rho,
                   "n_vertices": mesh.n_vertices})
    print(f"c_estimate={rep.c_estimate:.10g} threshold={rep.threshold:.10g} verdict={rep.verdict} "
          f"status={rep.status} residual={rep.residual:.3g}")
    files = {"iterations.csv": rep.iteration_csv(), "ray.csv": _csv(list(zip(prof.t, prof.values)), ["t", "phi"])}
    return result, files, "inconclusive" if rep.verdict == INCONCLUSIVE else "ok"


def cmd_bubbles_check(cfg, args):
    N = cfg["N"]
    mu = float(cfg["bubble"]["mu"])
    rng = np.random.default_rng(args.seed)
    rows, out = [], {}
    for eps in cfg["bubble"]["epsilon_list"]:
        y = tuple([0.0] * N)
        b = NeumannBubble(eps, y, mu)
        pts = rng.uniform(-2 * eps, 2 * eps, size=(100, N))
        pts[:, -1] = np.abs(pts[:, -1]) + 0.05 * eps
        bnd = rng.uniform(-2 * eps, 2 * eps, size=(20, N))
        bnd[:, -1] = 0.0
        h = 1e-3 * eps
        r1 = limit_problem_residual(b, pts, bnd, h=h)
        r2 = limit_problem_residual(b, pts, bnd, h=h / 2)
        d, t = trace_bubble_energy(N, eps, tol=args.tol)
        rows.append([float(eps), r1.max_interior_residual, r2.max_interior_residual, r1.max_boundary_residual,
                     d.value, t.value])
        print(f"eps={eps:g} interior={r1.max_interior_residual:.3g} (h/2: {r2.max_interior_residual:.3g}) "
              f"boundary={r1.max_boundary_residual:.3g} dirichlet={d.value:.10g} trace={t.value:.10g}")
    out["residuals"] = rows
    header = ["epsilon", "interior_h", "interior_h2", "boundary_h", "dirichlet", "trace"]
    return out, {"bubbles.csv": _csv(rows, header)}, "ok"


def _need_fem(cfg):
    if cfg["N"] != 3:
        raise DimensionNotSupported("finite-element commands need N=3 (axisymmetric half-ball)")


COMMANDS = {"constants": cmd_constants, "expand": cmd_expand, "conditions": cmd_conditions,
            "eigen": cmd_eigen, "solve": cmd_solve, "bubbles-check": cmd_bubbles_check}


def build_parser():
    ap = argparse.ArgumentParser(prog="twocrit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="JSON problem file")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs single-threaded")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        result, files, status = COMMANDS[args.command](cfg, args)
    except (ConfigError, DimensionTooSmall, DimensionNotSupported, InvalidCoefficients,
            MeshGenerationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, NoNegativeEnd, SingularGram, Stagnation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _write(args, cfg, {"error": str(exc)}, {}, "nonconvergence")
        return EXIT_NONCONV
    _write(args, cfg, result, files, status)
    return EXIT_OK if status == "ok" else EXIT_INCONCLUSIVE


def _write(args, cfg, result, files, status):
    report = {"command": args.command, "config": cfg, "status": status, "result": _jsonable(result),
              "seed": args.seed, "tol": args.tol}
    validate_report(report)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    for name, text in files.items():
        (args.out / name).write_text(text)


if __name__ == "__main__":
    sys.exit(main())
