"""
Coordinate Expressions
======================

The closed expression grammar used for ψ and φ in run configs:

- numbers, ``pi``
- coordinate names ``x1, y1, …, xp, yp, s, theta``
- ``+ - * /`` and unary minus
- ``**`` with a numeric exponent
- ``sin cos exp`` applied to a sub-expression

Expressions are parsed with ``ast`` and checked node by node against a
whitelist; anything else is rejected before evaluation. Evaluation walks the
validated tree with numpy, so the result broadcasts over coordinate arrays.
"""

import ast
import math
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import DomainError


class ExpressionValidator:
    """Validates expressions against the closed grammar."""

    ALLOWED_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
    ALLOWED_CONSTANTS = {"pi": math.pi}
    ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
    ALLOWED_UNARYOPS = (ast.USub, ast.UAdd)

    @staticmethod
    def validate(expr: str, names: Iterable[str]) -> Tuple[bool, str, Optional[ast.AST]]:
        """
        Validate an expression for the given coordinate names.

        Returns:
            (is_valid, message, ast_tree)
        """
        allowed_names = set(names) | set(ExpressionValidator.ALLOWED_CONSTANTS)
        try:
            tree = ast.parse(expr.strip(), mode="eval")
        except SyntaxError as e:
            return False, f"Syntax error: {e.msg}", None

        for node in ast.walk(tree):
            if isinstance(node, (ast.Expression, ast.expr_context, ast.operator, ast.unaryop)):
                continue
            if isinstance(node, ast.Constant):
                if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                    return False, f"Forbidden literal: {node.value!r}", None
            elif isinstance(node, ast.Name):
                if node.id not in allowed_names and node.id not in ExpressionValidator.ALLOWED_FUNCTIONS:
                    return False, f"Unknown name: {node.id}", None
            elif isinstance(node, ast.BinOp):
                if not isinstance(node.op, ExpressionValidator.ALLOWED_BINOPS):
                    return False, f"Forbidden operator: {type(node.op).__name__}", None
                if isinstance(node.op, ast.Pow) and not _is_numeric(node.right):
                    return False, "Exponent must be a number", None
            elif isinstance(node, ast.UnaryOp):
                if not isinstance(node.op, ExpressionValidator.ALLOWED_UNARYOPS):
                    return False, f"Forbidden operator: {type(node.op).__name__}", None
            elif isinstance(node, ast.Call):
                if (not isinstance(node.func, ast.Name)
                        or node.func.id not in ExpressionValidator.ALLOWED_FUNCTIONS
                        or len(node.args) != 1 or node.keywords):
                    return False, "Only sin(.), cos(.), exp(.) calls are allowed", None
            else:
                return False, f"Forbidden syntax: {type(node).__name__}", None

        # a bare function name is only valid as a call target
        call_targets = {id(node.func) for node in ast.walk(tree) if isinstance(node, ast.Call)}
        for node in ast.walk(tree):
            if (isinstance(node, ast.Name) and node.id in ExpressionValidator.ALLOWED_FUNCTIONS
                    and id(node) not in call_targets):
                return False, f"Function used as a value: {node.id}", None

        return True, "Expression is valid", tree


def _is_numeric(node: ast.AST) -> bool:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _is_numeric(node.operand)
    return isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
        and not isinstance(node.value, bool)


def _evaluate(node: ast.AST, env: Dict[str, np.ndarray]):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in ExpressionValidator.ALLOWED_CONSTANTS:
            return ExpressionValidator.ALLOWED_CONSTANTS[node.id]
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        value = _evaluate(node.operand, env)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.Call):
        return ExpressionValidator.ALLOWED_FUNCTIONS[node.func.id](_evaluate(node.args[0], env))
    left = _evaluate(node.left, env)
    right = _evaluate(node.right, env)
    if isinstance(node.op, ast.Add):
        return left + right
    if isinstance(node.op, ast.Sub):
        return left - right
    if isinstance(node.op, ast.Mult):
        return left * right
    if isinstance(node.op, ast.Div):
        return left / right
    return left ** right


def compile_expression(expr: str, names: Iterable[str]) -> Callable[[Dict[str, np.ndarray]], np.ndarray]:
    """
    Validate ``expr`` and return a function of a coordinate dictionary.

    Raises:
        DomainError: the expression is outside the grammar
    """
    valid, message, tree = ExpressionValidator.validate(expr, names)
    if not valid:
        raise DomainError(f"invalid expression {expr!r}: {message}")

    def evaluate(coords: Dict[str, np.ndarray]) -> np.ndarray:
        return _evaluate(tree, coords)

    return evaluate
