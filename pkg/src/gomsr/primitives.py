"""Primitive operators: protected numeric semantics and per-operator complexity rules.

All unary/binary primitives operate on numpy arrays and are "protected":
every input produces a defined output (division by ~0 yields 1, log of ~0
yields 0, sqrt takes the absolute value first), so any genotype can be
evaluated. Overflow to inf/nan is allowed and handled downstream by the
invalid-fitness convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PROTECTED_EPS = 1e-12

FEATURE_COMPLEXITY = 2.0
CONSTANT_COMPLEXITY = 1.0


def _protected_div(x, y):
    ok = np.abs(y) > PROTECTED_EPS
    safe = np.where(ok, y, 1.0)
    return np.where(ok, x / safe, 1.0)


def _protected_log(x):
    ok = np.abs(x) > PROTECTED_EPS
    safe = np.where(ok, x, 1.0)
    return np.where(ok, np.log(np.abs(safe)), 0.0)


def _protected_sqrt(x):
    return np.sqrt(np.abs(x))


def _protected_inv(x):
    ok = np.abs(x) > PROTECTED_EPS
    safe = np.where(ok, x, 1.0)
    return np.where(ok, 1.0 / safe, 1.0)


@dataclass(frozen=True)
class Operator:
    """An evaluable primitive with arity, numpy implementation, and complexity rule."""

    name: str
    arity: int
    fn: Callable
    # complexity rule takes the child scores (c0, c1); c1 is passed as 1.0
    # for unary operators so rules written against two children stay total
    complexity: Callable[[float, float], float]


OPERATORS: dict[str, Operator] = {
    op.name: op
    for op in (
        Operator("add", 2, np.add, lambda c0, c1: c0 + c1),
        Operator("sub", 2, np.subtract, lambda c0, c1: c0 + c1),
        Operator("mul", 2, np.multiply, lambda c0, c1: c0 * c1 + 1.0),
        Operator("div", 2, _protected_div, lambda c0, c1: c0 + c1 + 60.0),
        Operator("sin", 1, np.sin, lambda c0, c1: c0**3),
        Operator("cos", 1, np.cos, lambda c0, c1: c0**3),
        Operator("log", 1, _protected_log, lambda c0, c1: c0**3),
        Operator("sqrt", 1, _protected_sqrt, lambda c0, c1: c0**2),
        Operator("exp", 1, np.exp, lambda c0, c1: c0**3),
        Operator("neg", 1, np.negative, lambda c0, c1: c0 + 1.0),
        Operator("abs", 1, np.abs, lambda c0, c1: c0**2),
        Operator("square", 1, np.square, lambda c0, c1: c0**2),
        Operator("cube", 1, lambda x: x * x * x, lambda c0, c1: c0**3),
        Operator("inv", 1, _protected_inv, lambda c0, c1: c0 * c1 + 1.0),
        Operator("min", 2, np.minimum, lambda c0, c1: c0**2),
        Operator("max", 2, np.maximum, lambda c0, c1: c0**2),
    )
}

# Scoring-only rule for an operator that has no evaluation semantics here.
_EXTRA_COMPLEXITY_RULES: dict[str, Callable[[float, float], float]] = {
    "pow": lambda c0, c1: c0**3,
}

DEFAULT_FUNCTION_SET = ("add", "sub", "mul", "div", "sin", "cos", "log", "sqrt")

INFIX_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def complexity_rule(name: str) -> Callable[[float, float], float]:
    if name in OPERATORS:
        return OPERATORS[name].complexity
    return _EXTRA_COMPLEXITY_RULES[name]


def validate_function_set(names) -> tuple[str, ...]:
    names = tuple(names)
    unknown = [n for n in names if n not in OPERATORS]
    if unknown:
        raise ValueError(f"unknown operators in function set: {unknown}")
    if not names:
        raise ValueError("function set is empty")
    return names
