"""Closed-form field expressions evaluated on grid coordinates.

The grammar is deliberately small: numeric literals, the coordinates
``x`` (and ``y`` on 2D grids), the constants ``pi`` and ``e``, the binary
operators ``+ - * / **``, unary minus, and the functions ``sin``, ``cos``,
``tan``, ``exp``, ``log``, ``sqrt``, ``abs``.  Expressions are parsed with
the Python ``ast`` module and evaluated vectorized over numpy coordinate
arrays; anything outside the whitelist is rejected up front.
"""

from __future__ import annotations

import ast

import numpy as np

__all__ = ["ExpressionError", "compile_expression"]

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    """Raised for expressions outside the documented grammar."""


def _check(node: ast.AST, variables: tuple[str, ...]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError("only sin/cos/tan/exp/log/sqrt/abs calls allowed")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError("functions take exactly one positional argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"literal {node.value!r} not allowed")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _evaluate(node: ast.AST, env: dict[str, np.ndarray | float]):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.UnaryOp):
        value = _evaluate(node.operand, env)
        return -value if isinstance(node.op, ast.USub) else +value
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_evaluate(node.args[0], env))
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTANTS[node.id]
    if isinstance(node, ast.Constant):
        return float(node.value)
    raise AssertionError(f"unreachable: {node!r}")


def compile_expression(text: str, dimension: int):
    """Compile ``text`` into a callable ``f(points) -> values``.

    ``points`` is an ``(N, dimension)`` coordinate array.  Raises
    :class:`ExpressionError` for malformed input; evaluation errors
    (for example ``log`` of a negative coordinate) surface where the
    callable is invoked.
    """
    variables = ("x",) if dimension == 1 else ("x", "y")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as err:
        raise ExpressionError(f"malformed expression {text!r}: {err.msg}") from err
    _check(tree, variables)

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = {name: points[:, i] for i, name in enumerate(variables)}
        with np.errstate(all="ignore"):
            values = _evaluate(tree, env)
        return np.broadcast_to(np.asarray(values, dtype=float), (points.shape[0],)).copy()

    return evaluate
