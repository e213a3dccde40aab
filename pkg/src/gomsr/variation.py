"""Gene-pool optimal mixing and the mutation passes.

GOM clones an individual and, for each subset of the (shuffled) FOS, copies
the donor's symbols at those positions. Steps that change no active
position are rejected without evaluation; otherwise the clone is
re-evaluated and the change kept only if the acceptance rule passes.

Acceptance is pluggable: single-objective (not worse in one indexed
objective) or multi-objective (Pareto improvement, all-equal, or admission
into the elitist archive). Coefficient mutation perturbs each active
constant once, reverting individually on rejection. Duplicate-fitness
mutation resamples random slots until a change lands on an active node,
keeping one representative per duplicate group untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moarchive import ElitistArchive, dominates
from .objectives import Evaluator, Fitness
from .representation import (
    KIND_CONST,
    MultiTreeGenotype,
    SamplerParams,
    SearchSpace,
    active_mask,
)

DUPLICATE_MUTATION_CAP_FACTOR = 10


@dataclass
class Individual:
    genotype: MultiTreeGenotype
    fitness: Fitness
    cluster_id: int | None = None

    @property
    def values(self) -> np.ndarray:
        return self.fitness.values

    @property
    def valid(self) -> bool:
        return self.fitness.valid

    def copy(self) -> "Individual":
        return Individual(self.genotype.copy(), self.fitness.copy(), self.cluster_id)


@dataclass
class SingleObjective:
    """Accept iff the candidate is valid and not worse in one objective."""

    index: int

    def accepts(self, old: Fitness, new: Fitness, directions, genotype=None, origin=None) -> bool:
        if not new.valid:
            return False
        if not old.valid:
            return True
        d = directions[self.index]
        return new.values[self.index] * d >= old.values[self.index] * d


@dataclass
class MultiObjective:
    """Accept on Pareto improvement, equality, or archive admission.

    Every valid candidate is offered to the archive as a side effect of the
    test. Admission into the archive alone never carries a candidate that
    the current state dominates, nor one that `origin` (the state the whole
    mixing pass started from) dominates: chains of incomparable
    archive-admitted moves would otherwise let offspring drift to a point
    their own pre-mixing state dominates.
    """

    archive: ElitistArchive

    def accepts(self, old: Fitness, new: Fitness, directions, genotype=None, origin=None) -> bool:
        if not new.valid:
            return False
        admitted = self.archive.try_add(new.values, genotype)
        if not old.valid:
            return True
        if dominates(new.values, old.values, directions):
            return True
        if np.array_equal(new.values, old.values):
            return True
        if not admitted or dominates(old.values, new.values, directions):
            return False
        return origin is None or not origin.valid or not dominates(origin.values, new.values, directions)


AcceptanceRule = SingleObjective | MultiObjective


@dataclass
class GomStats:
    steps: int = 0
    meaningful_steps: int = 0
    accepted_steps: int = 0
    evaluations: int = 0


def _touches_active(
    g: MultiTreeGenotype, donor: MultiTreeGenotype, mask, tree: int, positions, const_code: int
) -> bool:
    """Does the donor differ from the recipient on any active subset slot?

    Constant values participate only where both sides hold the constant
    symbol; stale values parked under other symbols are not a difference.
    """
    codes_g = g.codes[tree]
    codes_d = donor.codes[tree]
    mask_row = mask[tree]
    for p in positions:
        if not mask_row[p]:
            continue
        a = codes_g[p]
        b = codes_d[p]
        if a != b:
            return True
        if a == const_code and g.consts[tree, p] != donor.consts[tree, p]:
            return True
    return False


def gom_step(
    ind: Individual,
    subset,
    donor: Individual,
    rule: AcceptanceRule,
    evaluator: Evaluator,
    mask=None,
    origin: Fitness | None = None,
    stats: GomStats | None = None,
    step_hook=None,
) -> tuple[Individual, bool]:
    """One mixing step: copy the donor's genes at `subset` into `ind`.

    Steps that change no active position are rejected without evaluation;
    otherwise the change is kept iff the acceptance rule passes, and
    reverted exactly on rejection. Mutates `ind` in place and returns it
    with a changed flag.
    """
    space = evaluator.space
    g = ind.genotype
    if mask is None:
        mask = active_mask(space, g)
    tree, positions = subset
    if stats:
        stats.steps += 1
    if not _touches_active(g, donor.genotype, mask, tree, positions, space.alphabet.const_code):
        if step_hook:
            step_hook("skipped", ind.fitness, None)
        return ind, False
    saved_codes = g.codes[tree, positions].copy()
    saved_consts = g.consts[tree, positions].copy()
    g.codes[tree, positions] = donor.genotype.codes[tree, positions]
    g.consts[tree, positions] = donor.genotype.consts[tree, positions]
    fit = evaluator.evaluate_genotype(g)
    if stats:
        stats.meaningful_steps += 1
        stats.evaluations += 1
    if rule.accepts(ind.fitness, fit, evaluator.objectives.directions, g, origin):
        if step_hook:
            step_hook("accepted", ind.fitness, fit)
        ind.fitness = fit
        if stats:
            stats.accepted_steps += 1
        return ind, True
    if step_hook:
        step_hook("rejected", ind.fitness, fit)
    g.codes[tree, positions] = saved_codes
    g.consts[tree, positions] = saved_consts
    return ind, False


def gom(
    ind: Individual,
    fos,
    donor_pool: list[Individual],
    rule: AcceptanceRule,
    evaluator: Evaluator,
    rng,
    stats: GomStats | None = None,
    step_hook=None,
) -> Individual:
    """One optimal-mixing pass over the shuffled FOS; returns the offspring."""
    if not donor_pool:
        raise ValueError("empty donor pool")
    child = ind.copy()
    origin = child.fitness.copy()
    mask = active_mask(evaluator.space, child.genotype)

    order = rng.permutation(len(fos))
    donor_picks = rng.integers(len(donor_pool), size=len(fos))
    for si, pick in zip(order, donor_picks):
        donor = donor_pool[int(pick)]
        child, changed = gom_step(child, fos[si], donor, rule, evaluator, mask, origin, stats, step_hook)
        if changed:
            mask = active_mask(evaluator.space, child.genotype)
    return child


def mutate_coefficients(
    ind: Individual,
    rule: AcceptanceRule,
    evaluator: Evaluator,
    rng,
    stats: GomStats | None = None,
    origin: Fitness | None = None,
) -> Individual:
    """Gaussian-perturb each active constant once; revert individually if rejected.

    `origin` extends the no-drift guard of the acceptance rule across a
    combined mixing + mutation pass.
    """
    space = evaluator.space
    ab = space.alphabet
    directions = evaluator.objectives.directions
    g = ind.genotype
    if origin is None:
        origin = ind.fitness.copy()
    mask = active_mask(space, g)
    const_slots = [
        (t, p)
        for t in range(g.n_trees)
        for p in np.flatnonzero(mask[t])
        if ab.kind(int(g.codes[t, p])) == KIND_CONST
    ]
    for t, p in const_slots:
        old = g.consts[t, p]
        g.consts[t, p] = old + rng.normal(0.0, 0.1 * (1.0 + abs(old)))
        fit = evaluator.evaluate_genotype(g)
        if stats:
            stats.evaluations += 1
        if rule.accepts(ind.fitness, fit, directions, g, origin):
            ind.fitness = fit
        else:
            g.consts[t, p] = old
    return ind


def _legal_codes(space: SearchSpace, tree: int, position: int) -> list[int]:
    """Symbols a mutation may place at one slot.

    Internal slots take operators, calls to preceding trees, features, the
    constant, and (outside the last tree) args; leaf slots take terminals
    only, so mutants stay evaluable.
    """
    ab = space.alphabet
    last = tree == space.n_trees - 1
    codes = [ab.const_code] + [ab.feature_code(i) for i in range(ab.n_features)]
    if not last:
        codes += [ab.arg_code(0), ab.arg_code(1)]
    if space.layout.left[position] >= 0:
        codes += list(range(ab.n_ops))
        codes += [ab.call_code(i) for i in range(tree)]
    return codes


def mutate_until_active(
    g: MultiTreeGenotype, space: SearchSpace, params: SamplerParams, rng
) -> bool:
    """Resample uniformly random (tree, position, symbol) until a change hits
    an active slot; neutral intermediate changes persist. Returns False if the
    attempt cap was reached first."""
    cap = DUPLICATE_MUTATION_CAP_FACTOR * g.n_trees * g.tree_size
    ab = space.alphabet
    mask = active_mask(space, g)
    for _ in range(cap):
        t = int(rng.integers(g.n_trees))
        p = int(rng.integers(g.tree_size))
        choices = _legal_codes(space, t, p)
        code = choices[int(rng.integers(len(choices)))]
        value = float(rng.uniform(params.const_low, params.const_high)) if code == ab.const_code else 0.0
        changed = code != g.codes[t, p] or (code == ab.const_code and value != g.consts[t, p])
        g.codes[t, p] = code
        g.consts[t, p] = value
        # changes at inactive slots cannot re-shape the mask, so it stays valid
        if changed and mask[t, p]:
            return True
    return False


def mutate_duplicates(
    population: list[Individual],
    evaluator: Evaluator,
    params: SamplerParams,
    rng,
) -> list[int]:
    """Mutate all but one uniformly-chosen representative of every group of
    individuals with identical objective vectors; mutated individuals are
    re-evaluated. Returns the mutated indices."""
    groups: dict[tuple, list[int]] = {}
    for i, ind in enumerate(population):
        key = tuple(ind.values.tolist()) if ind.valid else ("invalid",)
        groups.setdefault(key, []).append(i)

    mutated: list[int] = []
    for key, members in groups.items():
        if len(members) < 2:
            continue
        keep = members[int(rng.integers(len(members)))]
        for i in members:
            if i == keep:
                continue
            ind = population[i]
            mutate_until_active(ind.genotype, evaluator.space, params, rng)
            ind.fitness = evaluator.evaluate_genotype(ind.genotype)
            mutated.append(i)
    return mutated
