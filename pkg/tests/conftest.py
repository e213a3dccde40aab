"""Shared helpers: independent oracles and genotype generators."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gomsr.representation import (
    MultiTreeGenotype,
    SamplerParams,
    SearchSpace,
    make_space,
    sample_genotype,
)

PROTECTED_EPS = 1e-12


# ---------------------------------------------------------------------------
# scalar interpreter over expansion trees (oracle for the vectorized evaluator)


def scalar_eval(node: tuple, row) -> float:
    """Evaluate one expansion node for one sample, with IEEE-style overflow."""
    kind = node[0]
    if kind == "feat":
        return float(row[node[1]])
    if kind == "const":
        return float(node[1])
    name, children = node[1], node[2]
    if not children:
        return math.nan
    vals = [scalar_eval(c, row) for c in children]
    try:
        if name == "add":
            return vals[0] + vals[1]
        if name == "sub":
            return vals[0] - vals[1]
        if name == "mul":
            return vals[0] * vals[1]
        if name == "div":
            return vals[0] / vals[1] if abs(vals[1]) > PROTECTED_EPS else 1.0
        if name == "sin":
            return math.sin(vals[0])
        if name == "cos":
            return math.cos(vals[0])
        if name == "log":
            return math.log(abs(vals[0])) if abs(vals[0]) > PROTECTED_EPS else 0.0
        if name == "sqrt":
            return math.sqrt(abs(vals[0]))
        if name == "exp":
            return math.exp(vals[0])
        if name == "neg":
            return -vals[0]
        if name == "abs":
            return abs(vals[0])
        if name == "square":
            return vals[0] * vals[0]
        if name == "cube":
            return vals[0] ** 3
        if name == "inv":
            return 1.0 / vals[0] if abs(vals[0]) > PROTECTED_EPS else 1.0
        if name == "min":
            return min(vals)
        if name == "max":
            return max(vals)
    except OverflowError:
        return math.inf
    except ValueError:  # e.g. sin(inf)
        return math.nan
    raise AssertionError(f"oracle has no rule for {name}")


def close_enough(a: float, b: float, rel: float = 1e-9) -> bool:
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# generators


def random_genotype(space: SearchSpace, rng, scrambles: int = 0) -> MultiTreeGenotype:
    """A sampled genotype, optionally with donor-style subset swaps from a
    second sample so post-mixing structures (including function symbols
    uncovered on leaf slots) are represented."""
    params = SamplerParams(const_low=-2.0, const_high=2.0)
    g = sample_genotype(space, "grow" if rng.random() < 0.5 else "full", params, rng)
    for _ in range(scrambles):
        donor = sample_genotype(space, "grow" if rng.random() < 0.5 else "full", params, rng)
        t = int(rng.integers(space.n_trees))
        k = int(rng.integers(1, space.tree_size + 1))
        positions = rng.choice(space.tree_size, size=k, replace=False)
        g.codes[t, positions] = donor.codes[t, positions]
        g.consts[t, positions] = donor.consts[t, positions]
    return g


def random_features(rng, n_samples: int, n_features: int) -> np.ndarray:
    return rng.uniform(-3.0, 3.0, size=(n_samples, n_features))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_space() -> SearchSpace:
    return make_space(height=2, n_trees=3, n_features=3)


@pytest.fixture
def default_space() -> SearchSpace:
    return make_space(height=3, n_trees=4, n_features=5)
