"""Small expression language for coefficients in problem files.

Grammar: numbers, declared variable names, the constants ``pi`` and ``e``,
``+ - * / **`` with unary signs, parentheses, and the functions ``ln`` and
``exp``.  Anything else is rejected at parse time.  ``^`` is accepted as a
synonym for ``**``.

>>> f = compile_expr("1 + z**2", ("rho", "z"))
>>> float(f(0.0, 2.0))
5.0
"""

from __future__ import annotations

import ast
import math
import operator

import numpy as np

from .errors import ConfigError

__all__ = ["Expression", "compile_expr", "SPATIAL_VARS", "FIELD_VARS"]

SPATIAL_VARS = ("rho", "z")
FIELD_VARS = ("u",)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"ln": np.log, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}


class Expression:
    """Parsed expression; call it with one argument per declared variable."""

    def __init__(self, source: str, variables=SPATIAL_VARS):
        if not isinstance(source, str):
            raise ConfigError(f"expression must be a string, got {type(source).__name__}")
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body
        self.is_constant = not self._names(tree.body) & set(self.variables)

    def _names(self, node):
        return {n.id for n in ast.walk(node) if isinstance(n, ast.Name)}

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ConfigError(f"only numeric literals allowed in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ConfigError(f"unknown name {node.id!r} in {self.source!r}; allowed: {self.variables}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ConfigError(f"operator not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ConfigError(f"operator not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ConfigError(f"only ln and exp may be called in {self.source!r}")
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        else:
            raise ConfigError(f"construct {type(node).__name__} not allowed in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        env = {k: np.asarray(v, dtype=float) for k, v in zip(self.variables, args)}
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def constant_value(self) -> float:
        if not self.is_constant:
            raise ValueError(f"{self.source!r} depends on {self.variables}")
        return float(self._eval(self._tree, {}))

    def __repr__(self):
        return f"Expression({self.source!r}, {self.variables})"


def compile_expr(source, variables=SPATIAL_VARS):
    """Return a float for a constant expression, else an :class:`Expression` callable.

    Plain numbers pass straight through.
    """
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        return float(source)
    e = Expression(source, variables)
    return e.constant_value() if e.is_constant else e
