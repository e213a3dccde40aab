import itertools

import numpy as np
import pytest

from gomsr.cli import main as cli_main
from gomsr.harness import (
    compare_configs,
    config_from_items,
    dataset_label,
    holm_adjust,
    load_dataset,
    load_experiment,
    run_experiments,
    scan_runs,
    shared_axes,
    summarize,
    wilcoxon_signed_rank,
)
from gomsr.moarchive import hypervolume_2d, r2_axis, size_axis

SPEC_TEXT = """
[experiment]
name = demo
repetitions = 2
base_seed = 11
datasets = synthetic4
dataset_samples = 60

[mo_small]
mode = mo
clustering = bkmrr
clusters = 5
population_size = 20
tree_height = 2
n_trees = 2
max_generations = 2
time_budget = 1e9
duplicate_mutation = true

[so_small]
mode = so
population_size = 20
tree_height = 2
n_trees = 2
max_generations = 2
time_budget = 1e9
"""


@pytest.fixture(scope="module")
def experiment_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    spec_path = root / "demo.ini"
    spec_path.write_text(SPEC_TEXT)
    spec = load_experiment(spec_path)
    spec.output_dir = root / "out"
    outcomes = run_experiments(spec, workers=1, echo=lambda *_: None)
    assert not any(o.error for o in outcomes)
    return spec.output_dir


class TestConfigParsing:
    def test_round_trip_types(self):
        config = config_from_items(
            {
                "mode": "mo",
                "clustering": "bkrr",
                "population_size": "128",
                "linear_scaling": "false",
                "objectives": "r2, size",
                "time_budget": "120",
                "max_generations": "none",
            }
        )
        assert config.population_size == 128
        assert config.linear_scaling is False
        assert config.objectives == ("r2", "size")
        assert config.time_budget == 120.0
        assert config.max_generations is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown configuration key"):
            config_from_items({"tree_heihgt": "4"})

    def test_table_defaults(self):
        config = config_from_items({"mode": "mo"})
        assert config.population_size == 4096
        assert config.tree_height == 4
        assert config.n_trees == 4
        assert config.clusters == 5
        assert config.time_budget == 10800.0
        assert config.coefficient_probability == 0.5
        assert config.stagnation_generations == 100

    def test_dataset_refs(self):
        assert dataset_label("synthetic3") == "synthetic3"
        assert dataset_label("data/airfoil.csv:y") == "airfoil"
        d = load_dataset("synthetic2", 50, 1)
        assert d.n_features == 8
        with pytest.raises(ValueError, match="target"):
            load_dataset("data/airfoil.csv", 50, 1)

    def test_missing_experiment_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_experiment(tmp_path / "absent.ini")


class TestRunLayout:
    def test_directories_and_files(self, experiment_dir):
        for config_name in ("mo_small", "so_small"):
            for rep in (0, 1):
                d = experiment_dir / "runs" / config_name / "synthetic4" / f"rep{rep:02d}"
                assert (d / "config.txt").exists()
                assert (d / "generations.jsonl").exists()
                assert (d / "front.csv").exists()
        assert (experiment_dir / "summary.csv").exists()
        assert (experiment_dir / "runs.csv").exists()
        assert (experiment_dir / "convergence_generations.csv").exists()
        assert (experiment_dir / "convergence_time.csv").exists()

    def test_front_csv_has_metrics_columns(self, experiment_dir):
        front = (experiment_dir / "runs/mo_small/synthetic4/rep00/front.csv").read_text().splitlines()
        header = front[0].split(",")
        assert header[:2] == ["objective_r2", "objective_size"]
        for column in ("size", "dedup_size", "uses", "reuses", "functional_reuses", "expression"):
            assert column in header
        assert len(front) > 1

    def test_summary_idempotent(self, experiment_dir):
        summary = (experiment_dir / "summary.csv").read_bytes()
        convergence = (experiment_dir / "convergence_generations.csv").read_bytes()
        summarize(experiment_dir, echo=lambda *_: None)
        assert (experiment_dir / "summary.csv").read_bytes() == summary
        assert (experiment_dir / "convergence_generations.csv").read_bytes() == convergence

    def test_seed_is_base_plus_repetition(self, experiment_dir):
        for rep in (0, 1):
            items = dict(
                line.split(" = ")
                for line in (experiment_dir / f"runs/so_small/synthetic4/rep{rep:02d}/config.txt")
                .read_text()
                .splitlines()
            )
            assert int(items["seed"]) == 11 + rep

    def test_convergence_columns_and_dropout(self, experiment_dir):
        lines = (experiment_dir / "convergence_generations.csv").read_text().splitlines()
        assert lines[0] == "series,x,mean,std,n"
        rows = [line.split(",") for line in lines[1:]]
        assert all(int(r[4]) <= 2 for r in rows)
        series = {r[0] for r in rows}
        assert "mo_small/synthetic4" in series and "so_small/synthetic4" in series


class TestSharedNormalization:
    def test_shared_axes_fix_r2_and_span_observed_sizes(self, experiment_dir):
        runs = scan_runs(experiment_dir)
        axes = shared_axes(runs)
        assert axes[0].lo == 0.0 and axes[0].hi == 1.0
        observed = [
            p[1] for r in runs for record in r.records for p in record["front"]
        ]
        assert axes[1].lo == min(observed)
        assert axes[1].hi == max(observed)

    def test_normalization_monotone_in_span(self):
        front = [(0.6, 3.0), (0.8, 7.0)]
        wide = hypervolume_2d(front, (r2_axis(), size_axis(100.0)))
        narrow = hypervolume_2d(front, (r2_axis(), size_axis(10.0)))
        assert wide >= narrow


# ---------------------------------------------------------------------------
# statistics


def average_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def brute_force_wilcoxon(x, y, alternative):
    """Enumerates all sign assignments; independent of the DP implementation."""
    d = [a - b for a, b in zip(x, y) if a != b]
    if not d:
        return 1.0
    ranks = average_ranks([abs(v) for v in d])
    w_obs = sum(r for r, v in zip(ranks, d) if v > 0)
    n = len(d)
    ws = []
    for signs in itertools.product((0, 1), repeat=n):
        ws.append(sum(r for r, s in zip(ranks, signs) if s))
    total = 2**n
    greater = sum(w >= w_obs - 1e-12 for w in ws) / total
    less = sum(w <= w_obs + 1e-12 for w in ws) / total
    if alternative == "greater":
        return greater
    if alternative == "less":
        return less
    return min(1.0, 2 * min(greater, less))


class TestWilcoxon:
    def test_identical_samples(self):
        assert wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_ten_positive_distinct(self):
        x = [float(i) for i in range(1, 11)]
        y = [0.0] * 10
        p = wilcoxon_signed_rank(x, y)
        assert p == pytest.approx(2 / 1024)
        assert wilcoxon_signed_rank(x, y, "greater") == pytest.approx(1 / 1024)

    @pytest.mark.parametrize("n", [5, 8, 12])
    @pytest.mark.parametrize("alternative", ["two-sided", "greater", "less"])
    def test_matches_enumeration(self, n, alternative):
        rng = np.random.default_rng(n * 100)
        for trial in range(8):
            x = np.round(rng.normal(size=n), 1)
            y = np.round(rng.normal(size=n), 1)  # rounding provokes ties and zeros
            expected = brute_force_wilcoxon(list(x), list(y), alternative)
            got = wilcoxon_signed_rank(x, y, alternative)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_large_n_normal_branch(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0.4, 1.0, size=60)
        y = rng.normal(0.0, 1.0, size=60)
        p = wilcoxon_signed_rank(x, y, "greater")
        assert 0.0 < p < 0.05


class TestHolm:
    def test_step_down_example(self):
        flags = holm_adjust([0.01, 0.02, 0.04], alpha=0.05)
        assert flags == [True, True, True]

    def test_stops_at_first_failure(self):
        flags = holm_adjust([0.01, 0.03, 0.04], alpha=0.05)
        # 0.03 > 0.05/2 stops the chain even though 0.04 < 0.05
        assert flags == [True, False, False]

    def test_monotone_in_raw_order(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            ps = rng.uniform(0, 0.2, size=6).tolist()
            flags = holm_adjust(ps)
            for i in range(6):
                for j in range(6):
                    if ps[i] <= ps[j] and flags[j]:
                        assert flags[i]


class TestCompare:
    def test_compare_outputs(self, experiment_dir):
        comparisons = compare_configs(experiment_dir, "so_small", "mo_small")
        assert len(comparisons) == 1
        c = comparisons[0]
        assert c.dataset == "synthetic4"
        assert c.n == 2
        assert 0.0 <= c.p_value <= 1.0

    def test_cli_compare_and_summarize(self, experiment_dir, capsys):
        assert cli_main(["summarize", str(experiment_dir)]) == 0
        assert cli_main(["compare", str(experiment_dir), "so_small", "mo_small"]) == 0
        out = capsys.readouterr().out
        assert "synthetic4" in out
        assert (experiment_dir / "compare_so_small_vs_mo_small.csv").exists()


class TestCli:
    def test_synth_subcommand(self, tmp_path):
        assert cli_main(["synth", "--id", "3", "--samples", "40", "--seed", "2", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "synthetic3.csv").read_text().splitlines()
        assert text[0] == "x0,x1,x2,x3,x4,target"
        assert len(text) == 41

    def test_run_exit_code_on_failure(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text(
            "[experiment]\nrepetitions = 1\ndatasets = missing.csv:y\n\n"
            "[tiny]\nmode = so\npopulation_size = 8\ntree_height = 2\nn_trees = 2\nmax_generations = 1\n"
        )
        code = cli_main(["run", str(bad), "--output", str(tmp_path / "out")])
        assert code == 1

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GOMSR_OUTPUT_ROOT", str(tmp_path / "root"))
        from gomsr.harness import output_root

        assert output_root() == tmp_path / "root"
