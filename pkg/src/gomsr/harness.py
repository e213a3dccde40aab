"""Batch experiment harness.

An experiment file (INI-style, flat key = value) names one `[experiment]`
section plus one section per configuration. Every configuration runs on
every dataset for the configured number of repetitions, with seed =
base_seed + repetition, each run persisted as a directory of
(config snapshot, JSON-lines generation log, final-front CSV).

Summaries recompute hypervolumes post hoc under one normalization shared
by all runs in the experiment (accuracy stays fixed to [0, 1]; other
objectives span the min/max observed anywhere in the experiment), which
makes configurations comparable. Pairwise comparisons use the exact
Wilcoxon signed-rank test with Bonferroni-Holm correction across datasets.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .data import Dataset, generate_synthetic, load_csv
from .engine import RunConfig, RunResult, reporting_names, run
from .moarchive import HypervolumeAxis, hypervolume_2d, r2_axis
from .representation import dedup_size, expression_size, reuse_report, to_modular_infix

OUTPUT_ROOT_ENV = "GOMSR_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "gomsr_runs"

_SYNTH_RE = re.compile(r"^synthetic([1-5])$")


# ---------------------------------------------------------------------------
# experiment specification


@dataclass
class ExperimentSpec:
    name: str
    output_dir: Path
    repetitions: int
    base_seed: int
    datasets: list[str]
    configs: dict[str, RunConfig]
    dataset_samples: int = 1000
    dataset_seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if len(set(self.configs)) != len(self.configs) or not self.configs:
            raise ValueError("need uniquely named configurations")
        if not self.datasets:
            raise ValueError("need at least one dataset")


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_value(name: str, kind, raw: str):
    raw = raw.strip()
    if kind is bool:
        try:
            return _BOOL_VALUES[raw.lower()]
        except KeyError:
            raise ValueError(f"{name}: expected a boolean, got {raw!r}") from None
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def config_from_items(items: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from flat key = value text."""
    config = base or RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for key, raw in items.items():
        key = key.strip().lower()
        if key not in known:
            raise ValueError(f"unknown configuration key {key!r}")
        if key in ("function_set", "objectives"):
            updates[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif key in ("max_generations", "size_max", "clustering"):
            raw = raw.strip()
            if raw.lower() in ("", "none"):
                updates[key] = None if key != "clustering" else "none"
            else:
                updates[key] = float(raw) if key == "size_max" else (int(raw) if key == "max_generations" else raw)
        elif key == "mode":
            updates[key] = raw.strip().lower()
        else:
            hint = type(getattr(config, key))
            updates[key] = _parse_value(key, hint, raw)
    config = replace(config, **updates)
    config.validate()
    return config


def config_to_items(config: RunConfig) -> dict[str, str]:
    items = {}
    for f in fields(RunConfig):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            items[f.name] = ",".join(str(x) for x in v)
        else:
            items[f.name] = "" if v is None else str(v)
    return items


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"no such experiment file: {path}")
    if "experiment" not in parser:
        raise ValueError(f"{path}: missing [experiment] section")
    exp = parser["experiment"]
    name = exp.get("name", path.stem)
    out = exp.get("output_dir")
    output_dir = Path(out) if out else output_root() / name
    datasets = [d.strip() for d in exp.get("datasets", "").split(",") if d.strip()]
    configs = {}
    for section in parser.sections():
        if section == "experiment":
            continue
        configs[section] = config_from_items(dict(parser[section]))
    return ExperimentSpec(
        name=name,
        output_dir=output_dir,
        repetitions=exp.getint("repetitions", 10),
        base_seed=exp.getint("base_seed", 1),
        datasets=datasets,
        configs=configs,
        dataset_samples=exp.getint("dataset_samples", 1000),
        dataset_seed=exp.getint("dataset_seed", 0),
    )


def dataset_label(ref: str) -> str:
    m = _SYNTH_RE.match(ref)
    if m:
        return ref
    return Path(ref.rsplit(":", 1)[0]).stem


def load_dataset(ref: str, samples: int, seed: int) -> Dataset:
    m = _SYNTH_RE.match(ref)
    if m:
        return generate_synthetic(int(m.group(1)), samples, seed)
    if ":" not in ref:
        raise ValueError(f"dataset reference {ref!r} needs a ':target' column suffix")
    path, target = ref.rsplit(":", 1)
    return load_csv(path, target)


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunOutcome:
    config_name: str
    dataset: str
    repetition: int
    seed: int
    directory: Path
    error: str | None = None


def run_directory(output_dir: Path, config_name: str, dataset_ref: str, repetition: int) -> Path:
    return Path(output_dir) / "runs" / config_name / dataset_label(dataset_ref) / f"rep{repetition:02d}"


def _persist_run(result: RunResult, directory: Path, config_name: str, dataset_ref: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    items = config_to_items(result.config)
    items["dataset"] = dataset_ref
    items["config_name"] = config_name
    with open(directory / "config.txt", "w") as fh:
        for key in sorted(items):
            fh.write(f"{key} = {items[key]}\n")
    with open(directory / "generations.jsonl", "w") as fh:
        for record in result.records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    _write_front_csv(result, directory / "front.csv")
    summary = {
        "termination": result.termination,
        "generations": result.generations,
        "evaluations": result.evaluations,
        "final_hypervolume": result.final_hypervolume(),
        "wall_time": result.records[-1].wall_time,
    }
    with open(directory / "result.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)


def _write_front_csv(result: RunResult, path: Path) -> None:
    space = result.space
    rows = []
    for m in result.archive.members:
        g = m.genotype
        rep = reuse_report(space, g)
        rows.append(
            [float(v) for v in m.values]
            + [
                expression_size(space, g),
                dedup_size(space, g),
                rep.uses,
                rep.reuses,
                rep.functional_reuses,
                to_modular_infix(space, g),
            ]
        )
    rows.sort(key=lambda r: r[: len(result.config.objectives)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"objective_{n}" for n in result.config.objectives]
            + ["size", "dedup_size", "uses", "reuses", "functional_reuses", "expression"]
        )
        writer.writerows(rows)


def _execute_one(args) -> RunOutcome:
    spec_dir, config_name, config, dataset_ref, samples, dataset_seed, repetition, base_seed = args
    seed = base_seed + repetition
    directory = run_directory(spec_dir, config_name, dataset_ref, repetition)
    try:
        dataset = load_dataset(dataset_ref, samples, dataset_seed)
        result = run(replace(config, seed=seed), dataset)
        _persist_run(result, directory, config_name, dataset_ref)
        return RunOutcome(config_name, dataset_label(dataset_ref), repetition, seed, directory)
    except Exception as exc:  # noqa: BLE001 - a failed run must not sink the batch
        return RunOutcome(config_name, dataset_label(dataset_ref), repetition, seed, directory, error=str(exc))


def run_experiments(spec: ExperimentSpec, workers: int = 1, echo=print) -> list[RunOutcome]:
    """Execute every (configuration, dataset, repetition) and write summaries."""
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for config_name, config in spec.configs.items():
        for dataset_ref in spec.datasets:
            for rep in range(spec.repetitions):
                jobs.append(
                    (
                        spec.output_dir,
                        config_name,
                        config,
                        dataset_ref,
                        spec.dataset_samples,
                        spec.dataset_seed,
                        rep,
                        spec.base_seed,
                    )
                )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute_one, jobs))
    else:
        outcomes = [_execute_one(job) for job in jobs]
    for outcome in outcomes:
        if outcome.error:
            echo(f"FAILED {outcome.config_name}/{outcome.dataset}/rep{outcome.repetition}: {outcome.error}")
        else:
            echo(f"done {outcome.config_name}/{outcome.dataset}/rep{outcome.repetition}")
    if any(not o.error for o in outcomes):
        summarize(spec.output_dir, echo=echo)
    return outcomes


# ---------------------------------------------------------------------------
# post-hoc summaries under shared normalization


@dataclass
class PersistedRun:
    config_name: str
    dataset: str
    repetition: int
    directory: Path
    items: dict[str, str]
    records: list[dict]

    @property
    def objectives(self) -> tuple[str, ...]:
        return tuple(s.strip() for s in self.items["objectives"].split(","))

    @property
    def reporting(self) -> tuple[str, ...]:
        return reporting_names(self.objectives)


def scan_runs(output_dir) -> list[PersistedRun]:
    runs = []
    for config_file in sorted(Path(output_dir).glob("runs/*/*/rep*/config.txt")):
        directory = config_file.parent
        items = {}
        for line in config_file.read_text().splitlines():
            if "=" in line:
                key, _, value = line.partition("=")
                items[key.strip()] = value.strip()
        records = [
            json.loads(line)
            for line in (directory / "generations.jsonl").read_text().splitlines()
            if line.strip()
        ]
        runs.append(
            PersistedRun(
                config_name=items.get("config_name", directory.parent.parent.name),
                dataset=directory.parent.name,
                repetition=int(directory.name.replace("rep", "")),
                directory=directory,
                items=items,
                records=records,
            )
        )
    return runs


def shared_axes(runs: list[PersistedRun]) -> tuple[HypervolumeAxis, ...]:
    """One normalization for every run: accuracy fixed to [0, 1]; any other
    objective spans the values observed across all logged fronts."""
    reporting = runs[0].reporting
    for r in runs:
        if r.reporting != reporting:
            raise ValueError("runs report different objective pairs; cannot share normalization")
    axes = []
    for j, name in enumerate(reporting):
        if name == "r2":
            axes.append(r2_axis())
            continue
        values = [
            point[j]
            for r in runs
            for record in r.records
            for point in record["front"]
        ]
        lo = min(values) if values else 0.0
        hi = max(values) if values else 1.0
        direction = 1 if name == "cosine_count" else -1
        axes.append(HypervolumeAxis(direction, float(lo), float(hi) if hi > lo else float(lo) + 1.0))
    return tuple(axes)


def summarize(output_dir, echo=print) -> Path:
    """Recompute shared-normalization hypervolumes from persisted runs and
    write runs.csv, summary.csv, and the convergence series."""
    output_dir = Path(output_dir)
    runs = scan_runs(output_dir)
    if not runs:
        raise ValueError(f"no persisted runs under {output_dir}")
    axes = shared_axes(runs)

    runs_path = output_dir / "runs.csv"
    with open(runs_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["config", "dataset", "repetition", "seed", "generations", "evaluations",
             "termination", "wall_time", "hv_local", "hv_shared"]
        )
        for r in sorted(runs, key=lambda r: (r.config_name, r.dataset, r.repetition)):
            final = r.records[-1]
            writer.writerow(
                [
                    r.config_name,
                    r.dataset,
                    r.repetition,
                    r.items.get("seed", ""),
                    len(r.records) - 1,
                    final["evaluations"],
                    json.loads((r.directory / "result.json").read_text())["termination"],
                    final["wall_time"],
                    final["hypervolume"],
                    hypervolume_2d(final["front"], axes),
                ]
            )

    summary_path = output_dir / "summary.csv"
    groups: dict[tuple[str, str], list[float]] = {}
    for r in runs:
        groups.setdefault((r.config_name, r.dataset), []).append(
            hypervolume_2d(r.records[-1]["front"], axes)
        )
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "dataset", "n", "hv_mean", "hv_std", "hv_median"])
        for (config_name, dataset), values in sorted(groups.items()):
            arr = np.asarray(values)
            writer.writerow(
                [
                    config_name,
                    dataset,
                    len(values),
                    float(arr.mean()),
                    float(arr.std(ddof=1)) if len(values) > 1 else 0.0,
                    float(np.median(arr)),
                ]
            )

    emit_convergence(runs, axes, output_dir)
    echo(f"summary written to {summary_path}")
    return summary_path


def emit_convergence(runs: list[PersistedRun], axes, output_dir: Path) -> None:
    """Plot-ready series: mean/std of shared-normalization hypervolume per
    generation and per 1-second wall-time bucket, per (config, dataset)."""
    by_series: dict[str, list[PersistedRun]] = {}
    for r in runs:
        by_series.setdefault(f"{r.config_name}/{r.dataset}", []).append(r)

    with open(Path(output_dir) / "convergence_generations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "x", "mean", "std", "n"])
        for series, members in sorted(by_series.items()):
            horizon = max(len(r.records) for r in members)
            for g in range(horizon):
                values = [
                    hypervolume_2d(r.records[g]["front"], axes) for r in members if g < len(r.records)
                ]
                arr = np.asarray(values)
                writer.writerow(
                    [series, g, float(arr.mean()),
                     float(arr.std(ddof=1)) if len(values) > 1 else 0.0, len(values)]
                )

    with open(Path(output_dir) / "convergence_time.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "x", "mean", "std", "n"])
        for series, members in sorted(by_series.items()):
            horizon = int(math.ceil(max(r.records[-1]["wall_time"] for r in members)))
            for t in range(horizon + 1):
                values = []
                for r in members:
                    eligible = [rec for rec in r.records if rec["wall_time"] <= t]
                    if eligible and r.records[-1]["wall_time"] >= t - 1:
                        values.append(hypervolume_2d(eligible[-1]["front"], axes))
                if not values:
                    continue
                arr = np.asarray(values)
                writer.writerow(
                    [series, t, float(arr.mean()),
                     float(arr.std(ddof=1)) if len(values) > 1 else 0.0, len(values)]
                )


# ---------------------------------------------------------------------------
# statistics


def _signed_rank_statistic(diffs) -> tuple[float, np.ndarray]:
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0.0]
    if d.size == 0:
        return 0.0, np.empty(0)
    order = np.argsort(np.abs(d), kind="stable")
    ranks = np.empty(d.size)
    sorted_abs = np.abs(d)[order]
    i = 0
    while i < d.size:
        j = i
        while j + 1 < d.size and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    w_plus = float(ranks[d > 0].sum())
    return w_plus, ranks


def wilcoxon_signed_rank(x, y, alternative: str = "two-sided") -> float:
    """Paired Wilcoxon signed-rank p-value.

    Zero differences are dropped and ties get average ranks. The null
    distribution is exact (subset-sum enumeration over the doubled ranks)
    up to n = 25, with a tie-corrected normal approximation beyond.
    `alternative="greater"` tests whether x tends to exceed y.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    diffs = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    w_plus, ranks = _signed_rank_statistic(diffs)
    n = ranks.size
    if n == 0:
        return 1.0

    if n <= 25:
        doubled = np.rint(ranks * 2).astype(np.int64)
        total = int(doubled.sum())
        dist = np.zeros(total + 1)
        dist[0] = 1.0
        for r in doubled:
            shifted = np.zeros_like(dist)
            shifted[r:] = dist[: total + 1 - r]
            dist = dist + shifted
        dist /= 2.0**n
        w2 = int(round(w_plus * 2))
        p_greater = float(dist[w2:].sum())
        p_less = float(dist[: w2 + 1].sum())
    else:
        mean = n * (n + 1) / 4.0
        # each rank contributes r * Bernoulli(1/2): Var = sum r^2 / 4, which is
        # n(n+1)(2n+1)/24 without ties and tie-corrected with average ranks
        sd = math.sqrt(float((ranks**2).sum()) / 4.0)
        p_greater = 0.5 * math.erfc((w_plus - mean) / (sd * math.sqrt(2)))
        p_less = 0.5 * math.erfc((mean - w_plus) / (sd * math.sqrt(2)))

    if alternative == "greater":
        return min(p_greater, 1.0)
    if alternative == "less":
        return min(p_less, 1.0)
    return min(2.0 * min(p_greater, p_less), 1.0)


def holm_adjust(p_values, alpha: float = 0.05) -> list[bool]:
    """Bonferroni-Holm step-down significance flags, monotone in the raw order."""
    m = len(p_values)
    order = np.argsort(np.asarray(p_values), kind="stable")
    significant = [False] * m
    for rank, idx in enumerate(order):
        if p_values[idx] <= alpha / (m - rank):
            significant[idx] = True
        else:
            break
    return significant


@dataclass
class PairComparison:
    dataset: str
    n: int
    mean_a: float
    std_a: float
    mean_b: float
    std_b: float
    p_value: float
    significant: bool = False


def compare_configs(
    output_dir,
    config_a: str,
    config_b: str,
    alternative: str = "two-sided",
    alpha: float = 0.05,
) -> list[PairComparison]:
    """Per-dataset paired comparison of shared-normalization hypervolumes,
    Holm-corrected across the dataset family."""
    runs = scan_runs(output_dir)
    axes = shared_axes(runs)
    table: dict[str, dict[tuple[str, int], float]] = {}
    for r in runs:
        if r.config_name not in (config_a, config_b):
            continue
        table.setdefault(r.dataset, {})[(r.config_name, r.repetition)] = hypervolume_2d(
            r.records[-1]["front"], axes
        )

    comparisons = []
    for dataset in sorted(table):
        cells = table[dataset]
        reps = sorted({rep for (cfg, rep) in cells if cfg == config_a} & {rep for (cfg, rep) in cells if cfg == config_b})
        a = [cells[(config_a, rep)] for rep in reps]
        b = [cells[(config_b, rep)] for rep in reps]
        if not reps:
            continue
        comparisons.append(
            PairComparison(
                dataset=dataset,
                n=len(reps),
                mean_a=float(np.mean(a)),
                std_a=float(np.std(a, ddof=1)) if len(a) > 1 else 0.0,
                mean_b=float(np.mean(b)),
                std_b=float(np.std(b, ddof=1)) if len(b) > 1 else 0.0,
                p_value=wilcoxon_signed_rank(a, b, alternative),
            )
        )
    flags = holm_adjust([c.p_value for c in comparisons], alpha)
    for c, flag in zip(comparisons, flags):
        c.significant = flag
    return comparisons


def write_comparison_csv(comparisons: list[PairComparison], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "n", "mean_a", "std_a", "mean_b", "std_b", "p_value", "significant_holm"])
        for c in comparisons:
            writer.writerow([c.dataset, c.n, c.mean_a, c.std_a, c.mean_b, c.std_b, c.p_value, c.significant])
