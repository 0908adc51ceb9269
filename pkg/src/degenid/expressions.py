"""Arithmetic mini-language for initial data, sources and coefficients.

Grammar: numbers, the variables ``x`` and ``t``, the constants ``pi`` and
``e``, binary ``+ - * / ^`` (``^`` and ``**`` are both powers), unary
``+``/``-``, and calls to ``sin cos tan exp log sqrt abs sinh cosh tanh
min max``. Parsing goes through :mod:`ast` with a node whitelist; nothing
is passed to ``eval``.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "min": np.minimum,
    "max": np.maximum,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("x", "t")

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, source: str):
    if isinstance(node, ast.Expression):
        _check(node.body, source)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator not allowed in {source!r}")
        _check(node.left, source)
        _check(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNOPS:
            raise ExpressionError(f"operator not allowed in {source!r}")
        _check(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {source!r}")
        if node.keywords or not node.args:
            raise ExpressionError(f"bad call syntax in {source!r}")
        for a in node.args:
            _check(a, source)
    elif isinstance(node, ast.Name):
        if node.id not in VARIABLES and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals allowed in {source!r}")
    else:
        raise ExpressionError(f"unsupported syntax {type(node).__name__} in {source!r}")


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Call):
        args = [_eval(a, env) for a in node.args]
        fn = FUNCTIONS[node.func.id]
        if fn in (np.minimum, np.maximum):
            out = args[0]
            for a in args[1:]:
                out = fn(out, a)
            return out
        if len(args) != 1:
            raise ExpressionError(f"{node.func.id} takes one argument")
        return fn(args[0])
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else CONSTANTS[node.id]
    return float(node.value)


@dataclass(frozen=True)
class Expression:
    source: str
    tree: ast.Expression

    @property
    def uses_time(self) -> bool:
        return any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(self.tree))

    def __call__(self, x, t=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            val = _eval(self.tree.body, {"x": x, "t": t})
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast(x, t).shape).copy()


def parse_expression(source: str) -> Expression:
    if not isinstance(source, str):
        source = repr(float(source))
    text = source.replace("^", "**")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _check(tree, source)
    return Expression(source, tree)
