"""Problem files: JSON schema, validation and conversion to model objects."""

from __future__ import annotations

import copy
import json

import jsonschema
import numpy as np

from .errors import ConfigError
from .expr import FIELD_VARS, SPATIAL_VARS, compile_expr
from .mesh import build_mesh
from .nonlinearity import Perturbation, make_builtin
from .problem import ProblemInstance

__all__ = ["CONFIG_SCHEMA", "REPORT_SCHEMA", "load_config", "validate_config", "validate_report",
           "build_instance", "build_domain_mesh", "expression_perturbation", "resolve_perturbation"]

_NUM_OR_EXPR = {"oneOf": [{"type": "number"}, {"type": "string", "minLength": 1}]}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["N"],
    "additionalProperties": False,
    "properties": {
        "N": {"type": "integer", "minimum": 3},
        "beta": {"type": "number", "minimum": 0},
        "p": _NUM_OR_EXPR,
        "Q": _NUM_OR_EXPR,
        "a": _NUM_OR_EXPR,
        "g": {"oneOf": [
            {"type": "null"},
            {"type": "string", "minLength": 1},
            {"type": "object", "additionalProperties": False, "required": ["builtin"],
             "properties": {"builtin": {"enum": ["power", "log_power", "rational", "critical_log"]},
                            "params": {"type": "object", "additionalProperties": {"type": "number"}}}},
            {"type": "object", "additionalProperties": False, "required": ["expr"],
             "properties": {"expr": {"type": "string", "minLength": 1}}},
        ]},
        "domain": {"type": "object", "additionalProperties": False,
                   "properties": {"R_dom": {"type": "number", "exclusiveMinimum": 0},
                                  "h": {"type": "number", "exclusiveMinimum": 0},
                                  "h_min": {"type": "number", "exclusiveMinimum": 0},
                                  "grading": {"type": "number", "minimum": 0}}},
        "bubble": {"type": "object", "additionalProperties": False,
                   "properties": {"epsilon_list": {"type": "array", "minItems": 1,
                                                   "items": {"type": "number", "exclusiveMinimum": 0}},
                                  "mu": {"type": "number", "minimum": 0}}},
        "solver": {"type": "object", "additionalProperties": False,
                   "properties": {"K": {"type": "integer", "minimum": 2},
                                  "tau": {"type": "number", "exclusiveMinimum": 0},
                                  "max_iter": {"type": "integer", "minimum": 1},
                                  "delta_subcritical": {"type": "number", "minimum": 0},
                                  "step": {"type": "number", "exclusiveMinimum": 0},
                                  "margin": {"type": "number", "minimum": 0}}},
        "conditions": {"type": "array", "items": {"enum": ["trace_infinity", "trace_zero", "double_zero"]}},
    },
}

DEFAULTS = {
    "beta": 0.0, "p": 1.0, "Q": 1.0, "a": 0.0, "g": None,
    "domain": {"R_dom": 1.0, "h": 0.1, "h_min": 0.01, "grading": 0.1},
    "bubble": {"epsilon_list": [0.2, 0.1, 0.05, 0.025], "mu": 0.0},
    "solver": {"K": 12, "tau": 1e-7, "max_iter": 300, "delta_subcritical": 0.0, "step": 1.0, "margin": 1e-3},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "config", "status", "result"],
    "properties": {
        "command": {"enum": ["constants", "expand", "conditions", "eigen", "solve", "bubbles-check"]},
        "config": CONFIG_SCHEMA,
        "status": {"enum": ["ok", "inconclusive", "nonconvergence"]},
        "result": {"type": "object"},
        "seed": {"type": "integer"},
        "tol": {"type": "number"},
    },
}


def _fmt(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def validate_config(cfg: dict) -> dict:
    """Validate ``cfg`` and return a copy with defaults filled in.

    Expressions are parsed here as well, so a bad coefficient fails early.
    """
    try:
        jsonschema.Draft202012Validator(CONFIG_SCHEMA).validate(cfg)
    except jsonschema.ValidationError as exc:
        raise ConfigError(_fmt(exc)) from None
    out = copy.deepcopy(DEFAULTS)
    for k, v in cfg.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = copy.deepcopy(v)
    eps = out["bubble"]["epsilon_list"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("bubble/epsilon_list: must be strictly decreasing")
    for key in ("p", "Q", "a"):
        compile_expr(out[key], SPATIAL_VARS)
    g = out["g"]
    if isinstance(g, str) and g not in ("power", "log_power", "rational", "critical_log"):
        compile_expr(g, FIELD_VARS)
    elif isinstance(g, dict) and "expr" in g:
        compile_expr(g["expr"], FIELD_VARS)
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return validate_config(raw)


def validate_report(report: dict) -> None:
    try:
        jsonschema.Draft202012Validator(REPORT_SCHEMA).validate(report)
    except jsonschema.ValidationError as exc:
        raise ConfigError("report: " + _fmt(exc)) from None


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def expression_perturbation(source: str) -> Perturbation:
    """Perturbation ``g(u)`` from an expression in ``u``.

    The primitive is ``G(u) = u * int_0^1 g(s u) ds`` by 24-point Gauss-Legendre,
    exact for polynomial ``g`` up to degree 47.
    """
    g_expr = compile_expr(source, FIELD_VARS)
    if isinstance(g_expr, float):
        c = g_expr

        def g(u):
            return np.full(np.shape(u), c)
    else:
        g = g_expr

    def G(u):
        u = np.asarray(u, dtype=float)
        s = u[..., None] * _GL_X
        return u * (np.asarray(g(s)) @ _GL_W)

    return Perturbation(f"expr:{source}", g, G, params={"expr": source})


def resolve_perturbation(g, N=None):
    if g is None:
        return None
    if isinstance(g, str):
        if g in ("power", "log_power", "rational", "critical_log"):
            return _builtin(g, {}, N)
        return expression_perturbation(g)
    if "expr" in g:
        return expression_perturbation(g["expr"])
    return _builtin(g["builtin"], dict(g.get("params", {})), N)


def _builtin(name, params, N):
    if name == "critical_log":
        params["N"] = int(params.get("N", N if N and N >= 4 else 4))
    elif name == "log_power" and "N" in params:
        params["N"] = int(params["N"])
    return make_builtin(name, **params)


def build_instance(cfg: dict, delta: float | None = None) -> ProblemInstance:
    d = cfg["solver"]["delta_subcritical"] if delta is None else delta
    return ProblemInstance(
        N=cfg["N"], beta=float(cfg["beta"]),
        p=compile_expr(cfg["p"], SPATIAL_VARS), Q=compile_expr(cfg["Q"], SPATIAL_VARS),
        a=compile_expr(cfg["a"], SPATIAL_VARS), g=resolve_perturbation(cfg["g"], cfg["N"]), delta=float(d),
    )


def build_domain_mesh(cfg: dict):
    dom = cfg["domain"]
    return build_mesh(float(dom["R_dom"]), float(dom["h"]), dom.get("h_min"), float(dom.get("grading", 0.0)))
