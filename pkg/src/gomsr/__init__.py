"""Modular multi-tree GP-GOMEA symbolic regression."""

from .data import Dataset, TargetStats, generate_synthetic, load_csv, save_csv, target_stats
from .engine import RunConfig, RunResult, run, run_mo, run_so
from .moarchive import ElitistArchive, HypervolumeAxis, dominates, hypervolume_2d
from .objectives import Evaluator, LinearScaling, ObjectiveSet, evaluate, fit_linear_scaling
from .representation import (
    MultiTreeGenotype,
    SamplerParams,
    SearchSpace,
    active_mask,
    dedup_size,
    expand,
    expression_size,
    initialize_population,
    make_space,
    reuse_report,
)

__all__ = [
    "Dataset",
    "ElitistArchive",
    "Evaluator",
    "HypervolumeAxis",
    "LinearScaling",
    "MultiTreeGenotype",
    "ObjectiveSet",
    "RunConfig",
    "RunResult",
    "SamplerParams",
    "SearchSpace",
    "TargetStats",
    "active_mask",
    "dedup_size",
    "dominates",
    "evaluate",
    "expand",
    "expression_size",
    "fit_linear_scaling",
    "generate_synthetic",
    "hypervolume_2d",
    "initialize_population",
    "load_csv",
    "make_space",
    "reuse_report",
    "run",
    "run_mo",
    "run_so",
    "save_csv",
    "target_stats",
]

__version__ = "0.1.0"
