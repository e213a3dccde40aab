"""Command-line interface: run experiments, summarize, compare, export data."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import generate_synthetic, save_csv
from .harness import (
    compare_configs,
    load_experiment,
    run_experiments,
    summarize,
    write_comparison_csv,
)


def _cmd_run(args) -> int:
    spec = load_experiment(args.spec)
    if args.output:
        spec.output_dir = Path(args.output)
    outcomes = run_experiments(spec, workers=args.workers)
    failures = [o for o in outcomes if o.error]
    print(f"{len(outcomes) - len(failures)}/{len(outcomes)} runs completed, output in {spec.output_dir}")
    return 1 if failures else 0


def _cmd_summarize(args) -> int:
    summarize(args.output_dir)
    return 0


def _cmd_compare(args) -> int:
    comparisons = compare_configs(args.output_dir, args.config_a, args.config_b, args.alternative, args.alpha)
    if not comparisons:
        print("no overlapping runs to compare", file=sys.stderr)
        return 1
    for c in comparisons:
        mark = "*" if c.significant else " "
        print(
            f"{mark} {c.dataset}: {args.config_a} {c.mean_a:.4f}±{c.std_a:.4f} vs "
            f"{args.config_b} {c.mean_b:.4f}±{c.std_b:.4f}  p={c.p_value:.5f}"
        )
    out = args.out or Path(args.output_dir) / f"compare_{args.config_a}_vs_{args.config_b}.csv"
    write_comparison_csv(comparisons, out)
    print(f"comparison written to {out}")
    return 0


def _cmd_synth(args) -> int:
    ids = range(1, 6) if args.id == "all" else [int(args.id)]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for dataset_id in ids:
        d = generate_synthetic(dataset_id, args.samples, args.seed)
        path = outdir / f"synthetic{dataset_id}.csv"
        save_csv(d, path)
        print(f"wrote {path} ({d.n_samples} samples, {d.n_features} features)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gomsr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment file")
    p.add_argument("spec", help="experiment file (INI, see README)")
    p.add_argument("--output", help="override the experiment's output directory")
    p.add_argument("--workers", type=int, default=1, help="independent runs in parallel")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="rebuild runs.csv/summary.csv/convergence from run directories")
    p.add_argument("output_dir")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("compare", help="Wilcoxon+Holm comparison of two configurations")
    p.add_argument("output_dir")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.add_argument("--alternative", choices=("two-sided", "greater", "less"), default="two-sided")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="comparison CSV path")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("synth", help="emit the bundled synthetic datasets as CSV")
    p.add_argument("--id", default="all", choices=[str(i) for i in range(1, 6)] + ["all"])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
