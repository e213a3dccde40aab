"""Expression evaluation over datasets and the objective functions.

Predictions are computed vectorized over samples. A subexpression call
evaluates its bound children into argument vectors and then evaluates the
callee with arg0/arg1 bound to them; argument-free callees are evaluated
once per genotype evaluation and cached.

Objective vectors carry explicit optimization directions instead of sign
flips. Any non-finite objective value marks the whole vector invalid:
invalid individuals lose every acceptance comparison and never enter the
elitist archive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .primitives import OPERATORS, complexity_rule, CONSTANT_COMPLEXITY, FEATURE_COMPLEXITY
from .representation import (
    KIND_ARG,
    KIND_CONST,
    KIND_FEATURE,
    KIND_OP,
    MultiTreeGenotype,
    SearchSpace,
    analyze_structure,
    arg_usage,
    count_operator,
    dedup_size,
    expand,
)

try:  # compiled fast path; the numpy evaluator below stays the reference
    from . import fasteval as _fasteval
    from . import fastkernels as _fastkernels
except ImportError:  # pragma: no cover - numba not installed
    _fasteval = None
    _fastkernels = None

VAR_EPS = 1e-12

MAXIMIZE = 1
MINIMIZE = -1

# name -> optimization direction
OBJECTIVE_DIRECTIONS = {
    "r2": MAXIMIZE,
    "size": MINIMIZE,
    "dedup_size": MINIMIZE,
    "max_error": MINIMIZE,
    "operator_complexity": MINIMIZE,
    "ls_regularizer": MINIMIZE,
    "cosine_count": MAXIMIZE,
}

PREDICTION_OBJECTIVES = ("r2", "max_error", "ls_regularizer")


class LinearScaling(NamedTuple):
    """Least-squares offset/slope applied to predictions before error metrics."""

    a: float
    b: float


IDENTITY_SCALING = LinearScaling(0.0, 1.0)


@dataclass(frozen=True)
class ObjectiveSet:
    """The run's configured objectives, in order, with their directions."""

    names: tuple[str, ...]

    def __post_init__(self):
        unknown = [n for n in self.names if n not in OBJECTIVE_DIRECTIONS]
        if unknown:
            raise ValueError(f"unknown objectives: {unknown}")
        if not self.names:
            raise ValueError("objective list is empty")

    @property
    def directions(self) -> np.ndarray:
        return np.array([OBJECTIVE_DIRECTIONS[n] for n in self.names], dtype=np.int8)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __len__(self) -> int:
        return len(self.names)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(space: SearchSpace, g: MultiTreeGenotype, features: np.ndarray, arg_used=None) -> np.ndarray:
    """Per-sample value of the top-level expression.

    A function symbol stranded on a leaf slot (reachable but without
    template children) has no defined value and yields NaN, which the
    invalid-fitness convention absorbs. `arg_used` may carry a precomputed
    per-tree arg-consumption table to avoid a second structure pass.
    """
    ab = space.alphabet
    kind_table, arity_table, payload = ab.kind_table, ab.arity_table, ab.payload_table
    fns = [OPERATORS[name].fn for name in ab.function_set]
    lefts, rights = space.layout.left.tolist(), space.layout.right.tolist()
    if arg_used is None:
        arg_used = arg_usage(space, g)
    n = features.shape[0]
    nan = np.full(n, np.nan)
    cache: dict[int, np.ndarray] = {}
    code_rows = [row.tolist() for row in g.codes]

    def eval_node(t: int, pos: int, codes, a0, a1) -> np.ndarray:
        code = codes[pos]
        kind = kind_table[code]
        if kind == KIND_FEATURE:
            return features[:, payload[code]]
        if kind == KIND_CONST:
            return np.full(n, g.consts[t, pos])
        if kind == KIND_ARG:
            bound = a0 if payload[code] == 0 else a1
            return nan if bound is None else bound
        left = lefts[pos]
        if left < 0:
            return nan
        if kind == KIND_OP:
            if arity_table[code] == 1:
                return fns[code](eval_node(t, left, codes, a0, a1))
            return fns[code](eval_node(t, left, codes, a0, a1), eval_node(t, rights[pos], codes, a0, a1))
        callee = payload[code]
        used = arg_used[callee]
        b0 = eval_node(t, left, codes, a0, a1) if used[0] else None
        b1 = eval_node(t, rights[pos], codes, a0, a1) if used[1] else None
        return eval_tree(callee, b0, b1)

    def eval_tree(t: int, b0, b1) -> np.ndarray:
        if b0 is None and b1 is None:
            if t not in cache:
                cache[t] = eval_node(t, 0, code_rows[t], None, None)
            return cache[t]
        return eval_node(t, 0, code_rows[t], b0, b1)

    with np.errstate(all="ignore"):
        return np.asarray(eval_tree(g.n_trees - 1, None, None), dtype=float)


# ---------------------------------------------------------------------------
# accuracy metrics


def fit_linear_scaling(pred: np.ndarray, target: np.ndarray) -> LinearScaling:
    """Least-squares slope/offset of target on pred.

    Degenerate predictions (variance below 1e-12, or any non-finite value)
    fall back to predicting the target mean / the identity scaling.
    """
    if not np.isfinite(pred).all():
        return IDENTITY_SCALING
    mp = float(pred.mean())
    var = float(((pred - mp) ** 2).mean())
    mt = float(target.mean())
    if not math.isfinite(var) or var < VAR_EPS:
        return LinearScaling(mt, 0.0)
    cov = float(((target - mt) * (pred - mp)).mean())
    b = cov / var
    return LinearScaling(mt - b * mp, b)


def r_squared(pred: np.ndarray, target: np.ndarray, ls: LinearScaling) -> float:
    """1 - MSE/var(target) of the scaled prediction; NaN when unevaluable."""
    with np.errstate(all="ignore"):
        scaled = ls.a + ls.b * pred
        if not np.isfinite(scaled).all():
            return math.nan
        mse = float(((scaled - target) ** 2).mean())
    var = float(target.var())
    if var < VAR_EPS:
        return 1.0 if mse < VAR_EPS else math.nan
    return 1.0 - mse / var


def max_error(pred: np.ndarray, target: np.ndarray, ls: LinearScaling) -> float:
    with np.errstate(all="ignore"):
        scaled = ls.a + ls.b * pred
        if not np.isfinite(scaled).all():
            return math.nan
        return float(np.abs(scaled - target).max())


def ls_regularizer(ls: LinearScaling) -> float:
    """log(1 + a^2 + (b-1)^2): pressure toward interpretable scaling terms."""
    return math.log(1.0 + ls.a**2 + (ls.b - 1.0) ** 2)


# ---------------------------------------------------------------------------
# structural metrics


def operator_complexity(space: SearchSpace, g: MultiTreeGenotype) -> float:
    """Bottom-up complexity score of the expanded expression."""

    def score(node: tuple) -> float:
        kind = node[0]
        if kind == "feat":
            return FEATURE_COMPLEXITY
        if kind == "const":
            return CONSTANT_COMPLEXITY
        children = node[2]
        c0 = score(children[0]) if len(children) >= 1 else 1.0
        c1 = score(children[1]) if len(children) >= 2 else 1.0
        with np.errstate(all="ignore"):
            return float(complexity_rule(node[1])(c0, c1))

    return score(expand(space, g))


def cosine_count(space: SearchSpace, g: MultiTreeGenotype) -> int:
    """Number of cos operators in the expanded expression."""
    return count_operator(space, g, "cos")


# ---------------------------------------------------------------------------
# assembled fitness


@dataclass
class Fitness:
    """Objective values aligned with the run's objective list, plus validity and LS terms."""

    values: np.ndarray
    valid: bool
    ls: LinearScaling

    def copy(self) -> "Fitness":
        return Fitness(self.values.copy(), self.valid, self.ls)


class Evaluator:
    """Computes objective vectors for genotypes against one dataset.

    Shares a single prediction and linear-scaling fit across all configured
    objectives, and counts full-dataset predictions for cost accounting.
    """

    def __init__(
        self,
        space: SearchSpace,
        features: np.ndarray,
        target: np.ndarray,
        objectives: ObjectiveSet,
        linear_scaling: bool = True,
    ):
        if "ls_regularizer" in objectives.names and not linear_scaling:
            raise ValueError("ls_regularizer requires linear scaling to be enabled")
        self.space = space
        self.features = features
        self.target = np.asarray(target, dtype=float)
        self.objectives = objectives
        self.linear_scaling = linear_scaling
        self.needs_prediction = any(n in PREDICTION_OBJECTIVES for n in objectives.names)
        self.evaluations = 0
        self._n = len(self.target)
        self._t_mean = float(self.target.mean())
        self._t_var = float(self.target.var())
        self._count_op = "cos" if "cosine_count" in objectives.names and "cos" in space.alphabet.function_set else None
        self._counted_code = space.alphabet.op_code("cos") if self._count_op else -1
        self._fast = _fasteval.FastEvaluator(space, features) if _fasteval is not None else None

    def _fit_ls(self, pred: np.ndarray) -> LinearScaling:
        # same quantities as fit_linear_scaling, via dot products
        mp = float(pred.mean())
        centered = pred - mp
        var = float(centered @ centered) / self._n
        if not math.isfinite(var) or var < VAR_EPS:
            return LinearScaling(self._t_mean, 0.0)
        b = float(centered @ self.target) / self._n / var
        return LinearScaling(self._t_mean - b * mp, b)

    def _analyze(self, g: MultiTreeGenotype):
        """(arg_used, size, count) via the compiled path when available."""
        if self._fast is not None:
            return self._fast.analyze(g, self._counted_code)
        info = analyze_structure(self.space, g, self._count_op)
        return info.arg_used, info.size, info.op_count

    def predict(self, g: MultiTreeGenotype, arg_used=None) -> np.ndarray:
        """Per-sample prediction via the production evaluation path."""
        if arg_used is None:
            arg_used = self._analyze(g)[0]
        if self._fast is not None:
            try:
                return self._fast.predict(g, arg_used)
            except _fasteval.ProgramTooLarge:
                pass
        return evaluate(self.space, g, self.features, arg_used=arg_used)

    def _regression(self, pred: np.ndarray):
        """(ls, r2, max_error) under the configured scaling policy."""
        if _fastkernels is not None:
            finite, a, b, r2, maxerr = _fastkernels.regression_stats(
                pred, self.target, self._t_mean, self._t_var, self.linear_scaling
            )
            return LinearScaling(a, b) if finite else IDENTITY_SCALING, r2, maxerr
        if not np.isfinite(pred).all():
            return IDENTITY_SCALING, math.nan, math.nan
        ls = self._fit_ls(pred) if self.linear_scaling else IDENTITY_SCALING
        resid = ls.a + ls.b * pred - self.target
        if not np.isfinite(resid).all():
            return ls, math.nan, math.nan
        mse = float(resid @ resid) / self._n
        if self._t_var >= VAR_EPS:
            r2 = 1.0 - mse / self._t_var
        else:
            r2 = 1.0 if mse < VAR_EPS else math.nan
        return ls, r2, float(np.abs(resid).max())

    def evaluate_genotype(self, g: MultiTreeGenotype) -> Fitness:
        arg_used, size, op_count = self._analyze(g)
        ls = IDENTITY_SCALING
        r2 = math.nan
        maxerr = math.nan
        if self.needs_prediction:
            with np.errstate(all="ignore"):
                pred = self.predict(g, arg_used)
                self.evaluations += 1
                ls, r2, maxerr = self._regression(pred)
        values = np.empty(len(self.objectives))
        for i, name in enumerate(self.objectives.names):
            if name == "r2":
                values[i] = r2
            elif name == "size":
                values[i] = size
            elif name == "dedup_size":
                values[i] = dedup_size(self.space, g)
            elif name == "max_error":
                values[i] = maxerr
            elif name == "operator_complexity":
                values[i] = operator_complexity(self.space, g)
            elif name == "ls_regularizer":
                values[i] = ls_regularizer(ls)
            elif name == "cosine_count":
                values[i] = op_count
        return Fitness(values, bool(np.isfinite(values).all()), ls)
