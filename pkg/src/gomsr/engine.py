"""Single- and multi-objective generational loops.

Both modes share: half-and-half initialization, linkage-learned FOS,
optimal mixing with coefficient mutation, an elitist archive, per
generation JSON-serializable log records, and termination on a wall-time
budget or on the archive not changing for a configured number of
generations.

SO mode drives acceptance on accuracy only and merely *tracks* the
population in the archive (the archive never influences the search). MO
mode clusters the population each generation, learns one FOS per
(cluster, tree) from the cluster's donor pool, and applies per-cluster
acceptance: single-objective in extreme clusters, Pareto/archive-based in
middle clusters.

Reproducibility: one master PCG64 generator drives initialization,
duplicate mutation, and clustering; each (generation, individual) mixing
pass gets its own child generator derived from the run seed, so a run is a
pure function of (config, dataset) for worker_count 1. Wall times come from
an injectable clock.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .clustering import (
    EXTREME,
    ClusteringResult,
    cluster_bkrr,
    cluster_bkmrr,
    cluster_original,
    no_clustering,
)
from .data import Dataset, target_stats
from .linkage import combined_fos
from .moarchive import ElitistArchive, HypervolumeAxis, hypervolume_2d, r2_axis
from .objectives import Evaluator, ObjectiveSet
from .primitives import DEFAULT_FUNCTION_SET
from .representation import (
    SamplerParams,
    SearchSpace,
    expression_size,
    initialize_population,
    make_space,
)
from .variation import (
    Individual,
    MultiObjective,
    SingleObjective,
    gom,
    mutate_coefficients,
    mutate_duplicates,
)

SO = "so"
MO = "mo"

CLUSTERING_STRATEGIES = ("original", "bkrr", "bkmrr", "none")


@dataclass
class RunConfig:
    """Settings of one evolutionary run; defaults follow the standard protocol."""

    population_size: int = 4096
    tree_height: int = 4
    n_trees: int = 4
    function_set: tuple[str, ...] = DEFAULT_FUNCTION_SET
    objectives: tuple[str, ...] = ("r2", "size")
    mode: str = MO
    clustering: str | None = None  # so -> none, mo -> bkmrr
    clusters: int = 5
    linear_scaling: bool = True
    duplicate_mutation: bool = False
    terminal_probability: float = 0.5
    coefficient_probability: float = 0.5
    time_budget: float = 10800.0
    stagnation_generations: int = 100
    max_generations: int | None = None
    seed: int = 1
    workers: int = 1
    size_max: float | None = None

    def resolved_clustering(self) -> str:
        if self.clustering is None:
            return "none" if self.mode == SO else "bkmrr"
        return self.clustering

    def validate(self) -> None:
        if self.mode not in (SO, MO):
            raise ValueError(f"mode must be 'so' or 'mo', got {self.mode!r}")
        strategy = self.resolved_clustering()
        if strategy not in CLUSTERING_STRATEGIES:
            raise ValueError(f"unknown clustering strategy {strategy!r}")
        if self.mode == SO:
            if strategy != "none":
                raise ValueError("clustering is not applicable in SO mode")
            if "r2" not in self.objectives:
                raise ValueError("SO mode drives on r2; include it in the objectives")
        else:
            if len(self.objectives) != 2:
                raise ValueError("MO mode expects exactly two objectives")
            if strategy == "bkmrr" and self.clusters <= len(self.objectives):
                raise ValueError("bkmrr needs more clusters than objectives")
            if strategy != "none" and self.population_size < self.clusters:
                raise ValueError("population smaller than cluster count")
        if "ls_regularizer" in self.objectives and not self.linear_scaling:
            raise ValueError("ls_regularizer requires linear scaling")
        if self.population_size < 2:
            raise ValueError("population size must be >= 2")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")


@dataclass
class GenerationRecord:
    generation: int
    wall_time: float
    hypervolume: float
    best: dict[str, float]
    evaluations: int
    archive_size: int
    unchanged_generations: int
    front: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "wall_time": round(self.wall_time, 6),
            "hypervolume": self.hypervolume,
            "best": self.best,
            "evaluations": self.evaluations,
            "archive_size": self.archive_size,
            "unchanged_generations": self.unchanged_generations,
            "front": self.front,
        }


@dataclass
class RunResult:
    config: RunConfig
    records: list[GenerationRecord]
    archive: ElitistArchive
    population: list[Individual]
    termination: str
    evaluations: int
    space: SearchSpace
    reporting_objectives: tuple[str, ...]
    population_digests: list[str] = field(default_factory=list)

    @property
    def generations(self) -> int:
        return len(self.records) - 1

    def final_hypervolume(self) -> float:
        return self.records[-1].hypervolume


# live-log normalization spans for unbounded objectives; cross-configuration
# comparisons renormalize post hoc from observed values instead
_COMPLEXITY_SPAN = 1e6
_LS_REG_SPAN = 50.0


def reporting_axes(config: RunConfig, space: SearchSpace, stats) -> tuple[HypervolumeAxis, ...]:
    size_hi = config.size_max if config.size_max is not None else space.capacity
    axes = []
    for name in reporting_names(config.objectives):
        if name == "r2":
            axes.append(r2_axis())
        elif name in ("size", "dedup_size"):
            axes.append(HypervolumeAxis(-1, 0.0, float(size_hi)))
        elif name == "cosine_count":
            axes.append(HypervolumeAxis(1, 0.0, float(size_hi)))
        elif name == "max_error":
            axes.append(HypervolumeAxis(-1, 0.0, max(stats.max_target - stats.min_target, 1e-9)))
        elif name == "operator_complexity":
            axes.append(HypervolumeAxis(-1, 0.0, _COMPLEXITY_SPAN))
        elif name == "ls_regularizer":
            axes.append(HypervolumeAxis(-1, 0.0, _LS_REG_SPAN))
        else:
            raise ValueError(f"no hypervolume axis for objective {name!r}")
    return tuple(axes)


def reporting_names(objective_names) -> tuple[str, ...]:
    """The objectives reported in logs/fronts: the de-duplicated size objective
    steers the search but is reported as plain expression size."""
    return tuple("size" if n == "dedup_size" else n for n in objective_names)


class _Run:
    def __init__(self, config: RunConfig, dataset: Dataset, clock, record_archive: bool, trace: bool):
        config.validate()
        self.config = config
        self.dataset = dataset
        self.clock = clock or time.monotonic
        self.record_archive = record_archive
        self.trace = trace

        self.space = make_space(config.tree_height, config.n_trees, dataset.n_features, config.function_set)
        self.stats = target_stats(dataset)
        self.params = SamplerParams(
            config.terminal_probability,
            config.coefficient_probability,
            self.stats.min_target,
            self.stats.max_target,
        )
        self.objectives = ObjectiveSet(tuple(config.objectives))
        self.directions = self.objectives.directions
        self.evaluator = Evaluator(
            self.space, dataset.features, dataset.target, self.objectives, config.linear_scaling
        )
        self.archive = ElitistArchive(self.directions)
        self.axes = reporting_axes(config, self.space, self.stats)
        self.reporting = reporting_names(config.objectives)
        self.master = np.random.default_rng(config.seed)
        self.records: list[GenerationRecord] = []
        self.digests: list[str] = []

    # -- bookkeeping -------------------------------------------------------

    def _individual_rng(self, generation: int, index: int):
        ss = np.random.SeedSequence(entropy=self.config.seed, spawn_key=(generation, index))
        return np.random.default_rng(ss)

    def _reporting_values(self, values: np.ndarray, genotype) -> list[float]:
        out = []
        for i, name in enumerate(self.config.objectives):
            if name == "dedup_size":
                out.append(float(expression_size(self.space, genotype)))
            else:
                out.append(float(values[i]))
        return out

    def _offer_population(self, population: list[Individual]) -> None:
        for ind in population:
            if ind.valid:
                self.archive.try_add(ind.values, ind.genotype)

    def _archive_front(self) -> list[list[float]]:
        front = [self._reporting_values(m.values, m.genotype) for m in self.archive.members]
        return sorted(front)

    def _record(self, generation: int, population: list[Individual], start: float) -> None:
        front = self._archive_front() if self.record_archive else []
        hv = hypervolume_2d(front, self.axes) if len(self.axes) == 2 and front else 0.0
        best: dict[str, float] = {}
        valid = [ind for ind in population if ind.valid]
        for i, name in enumerate(self.config.objectives):
            if valid:
                vals = np.array([ind.values[i] for ind in valid])
                best[name] = float(vals.max() if self.directions[i] > 0 else vals.min())
            else:
                best[name] = float("nan")
        self.records.append(
            GenerationRecord(
                generation=generation,
                wall_time=self.clock() - start,
                hypervolume=hv,
                best=best,
                evaluations=self.evaluator.evaluations,
                archive_size=len(self.archive),
                unchanged_generations=self.archive.unchanged_generations,
                front=front,
            )
        )
        if self.trace:
            h = hashlib.sha256()
            for ind in population:
                h.update(ind.genotype.codes.tobytes())
                h.update(ind.genotype.consts.tobytes())
                h.update(np.ascontiguousarray(ind.values).tobytes())
            self.digests.append(h.hexdigest())

    def _termination(self, elapsed: float, generation: int) -> str | None:
        if elapsed >= self.config.time_budget:
            return "time_budget"
        if self.record_archive and self.archive.unchanged_generations >= self.config.stagnation_generations:
            return "archive_stagnation"
        if self.config.max_generations is not None and generation >= self.config.max_generations:
            return "max_generations"
        return None

    # -- variation ---------------------------------------------------------

    def _mix_population(self, population, generation, plans) -> list[Individual]:
        """Apply GOM + coefficient mutation to every individual.

        `plans[i]` is (fos, donor_pool, rule); donors read the frozen parent
        population. Worker threads only parallelize independent individuals;
        archive insertion stays internally synchronized.
        """

        def work(idx: int) -> Individual:
            fos, pool, rule = plans[idx]
            rng = self._individual_rng(generation, idx)
            origin = population[idx].fitness.copy()
            child = gom(population[idx], fos, pool, rule, self.evaluator, rng)
            return mutate_coefficients(child, rule, self.evaluator, rng, origin=origin)

        if self.config.workers == 1:
            return [work(i) for i in range(len(population))]
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return list(pool.map(work, range(len(population))))

    def _cluster(self, population: list[Individual]) -> ClusteringResult:
        values = np.stack([ind.values for ind in population])
        valid = np.array([ind.valid for ind in population])
        strategy = self.config.resolved_clustering()
        if strategy == "none":
            return no_clustering(values, valid, self.directions)
        if strategy == "original":
            return cluster_original(values, valid, self.directions, self.config.clusters, self.master)
        if strategy == "bkrr":
            return cluster_bkrr(values, valid, self.directions, self.config.clusters, self.master)
        return cluster_bkmrr(values, valid, self.directions, self.config.clusters, self.master)

    # -- main loops --------------------------------------------------------

    def run(self) -> RunResult:
        start = self.clock()
        population = [
            Individual(g, self.evaluator.evaluate_genotype(g))
            for g in initialize_population(self.space, self.config.population_size, self.params, self.master)
        ]
        if self.record_archive:
            self._offer_population(population)
        self._record(0, population, start)
        if self.record_archive:
            self.archive.rebuild_grid()

        generation = 0
        termination = self._termination(self.records[-1].wall_time, generation)
        while termination is None:
            generation += 1
            if self.config.mode == SO:
                population = self._so_generation(population, generation)
            else:
                population = self._mo_generation(population, generation)
            self._record(generation, population, start)
            if self.record_archive:
                self.archive.rebuild_grid()
            termination = self._termination(self.records[-1].wall_time, generation)

        return RunResult(
            config=self.config,
            records=self.records,
            archive=self.archive,
            population=population,
            termination=termination,
            evaluations=self.evaluator.evaluations,
            space=self.space,
            reporting_objectives=self.reporting,
            population_digests=self.digests,
        )

    def _so_generation(self, population: list[Individual], generation: int) -> list[Individual]:
        genotypes = [ind.genotype for ind in population]
        fos = combined_fos(genotypes, self.space)
        rule = SingleObjective(self.objectives.index("r2"))
        plans = [(fos, population, rule)] * len(population)
        offspring = self._mix_population(population, generation, plans)
        if self.config.duplicate_mutation:
            mutate_duplicates(offspring, self.evaluator, self.params, self.master)
        if self.record_archive:
            self._offer_population(offspring)
        return offspring

    def _mo_generation(self, population: list[Individual], generation: int) -> list[Individual]:
        if self.config.duplicate_mutation:
            mutate_duplicates(population, self.evaluator, self.params, self.master)
        clustering = self._cluster(population)
        rules = []
        for cluster in clustering.clusters:
            if cluster.kind == EXTREME:
                rules.append(SingleObjective(cluster.objective))
            else:
                rules.append(MultiObjective(self.archive))
        foses = []
        for cluster in clustering.clusters:
            donors = [population[j].genotype for j in cluster.donors]
            foses.append(combined_fos(donors, self.space))
        donor_pools = [[population[j] for j in cluster.donors] for cluster in clustering.clusters]

        plans = []
        for idx in range(len(population)):
            cid = int(clustering.assignment[idx])
            population[idx].cluster_id = cid
            plans.append((foses[cid], donor_pools[cid], rules[cid]))
        offspring = self._mix_population(population, generation, plans)
        self._offer_population(offspring)
        return offspring


def run(
    config: RunConfig,
    dataset: Dataset,
    clock: Callable[[], float] | None = None,
    record_archive: bool = True,
    trace: bool = False,
) -> RunResult:
    """Execute one run. `record_archive=False` (SO only) disables all archive
    interaction to verify the archive's passivity; such runs need
    `max_generations` or a time budget to terminate."""
    if config.mode == MO and not record_archive:
        raise ValueError("the archive cannot be disabled in MO mode")
    return _Run(config, dataset, clock, record_archive, trace).run()


def run_so(config: RunConfig, dataset: Dataset, **kwargs) -> RunResult:
    if config.mode != SO:
        raise ValueError("run_so expects an SO configuration")
    return run(config, dataset, **kwargs)


def run_mo(config: RunConfig, dataset: Dataset, **kwargs) -> RunResult:
    if config.mode != MO:
        raise ValueError("run_mo expects an MO configuration")
    return run(config, dataset, **kwargs)
