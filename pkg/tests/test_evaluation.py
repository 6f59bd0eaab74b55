import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from promptseg import (
    AblationGrid,
    AblationSetup,
    EvalCase,
    Mask,
    PhantomConfig,
    SearchConfig,
    benchmark_strategies,
    dice,
    generate_phantom,
    prompt_variance,
    roi_fraction_scorer,
    run_ablation,
)

from conftest import TINY_PHANTOM


def mask_of(bits, dims=(2, 2, 2)):
    return Mask(np.array(bits, dtype=np.uint8).reshape(dims, order="F"))


class TestDice:
    def test_identical_nonempty(self, rng):
        m = Mask((rng.random((4, 4, 2)) < 0.5).astype(np.uint8))
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        a = mask_of([1, 0, 0, 0, 0, 0, 0, 0])
        b = mask_of([0, 1, 0, 0, 0, 0, 0, 0])
        assert dice(a, b) == 0.0

    def test_half_overlap(self):
        a = mask_of([1, 1, 1, 1, 0, 0, 0, 0])
        b = mask_of([0, 0, 1, 1, 1, 1, 0, 0])
        assert dice(a, b) == 0.5

    def test_both_empty_is_one(self):
        empty = mask_of([0] * 8)
        assert dice(empty, empty) == 1.0

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dims"):
            dice(mask_of([0] * 8), Mask(np.zeros((2, 2, 1), dtype=np.uint8)))

    @given(st.lists(st.integers(0, 1), min_size=8, max_size=8),
           st.lists(st.integers(0, 1), min_size=8, max_size=8))
    def test_symmetry_and_range(self, xs, ys):
        a, b = mask_of(xs), mask_of(ys)
        assert dice(a, b) == dice(b, a)
        assert 0.0 <= dice(a, b) <= 1.0

    def test_monotone_in_true_positives(self):
        gt = mask_of([1, 1, 1, 1, 0, 0, 0, 0])
        low = mask_of([1, 0, 0, 0, 0, 0, 0, 0])
        high = mask_of([1, 1, 0, 0, 0, 0, 0, 0])
        assert dice(high, gt) > dice(low, gt)


class TestPromptVariance:
    def test_single_positive_voxel_gives_zero_stdev(self):
        data = np.zeros((64, 64, 24), dtype=np.uint8)
        data[32, 32, 12] = 1
        gt = Mask(data)
        scorer = roi_fraction_scorer(gt)
        volume = generate_phantom(PhantomConfig(dims=(64, 64, 24, 1)), seed=0).volume
        mean, std = prompt_variance(volume, gt, SearchConfig(), scorer, scorer,
                                    num_prompts=4, seed=0)
        assert std == 0.0

    def test_sphere_stdev_bounded(self, sphere, sphere_scorers):
        mean, std = prompt_variance(sphere.volume, sphere.mask, SearchConfig(),
                                    *sphere_scorers, num_prompts=8, seed=5)
        assert std <= 0.15

    def test_deterministic(self, sphere, sphere_scorers):
        a = prompt_variance(sphere.volume, sphere.mask, SearchConfig(),
                            *sphere_scorers, num_prompts=4, seed=2)
        b = prompt_variance(sphere.volume, sphere.mask, SearchConfig(),
                            *sphere_scorers, num_prompts=4, seed=2)
        assert a == b

    def test_needs_two_prompts(self, sphere, sphere_scorers):
        with pytest.raises(ValueError, match="num_prompts"):
            prompt_variance(sphere.volume, sphere.mask, SearchConfig(),
                            *sphere_scorers, num_prompts=1)

    def test_empty_gt_rejected(self, sphere, sphere_scorers):
        empty = Mask(np.zeros((64, 64, 24), dtype=np.uint8))
        with pytest.raises(ValueError, match="empty"):
            prompt_variance(sphere.volume, empty, SearchConfig(),
                            *sphere_scorers, num_prompts=4)


class TestBenchmarkStrategies:
    def test_rows_and_csv(self, sphere, sphere_scorers, tmp_path):
        cases = [EvalCase(volume=sphere.volume, gt=sphere.mask, prompt=(32, 32, 12))]
        results = benchmark_strategies(cases, SearchConfig(), sphere_scorers,
                                       csv_path=tmp_path / "bench.csv")
        by_name = {r.strategy: r for r in results}
        assert set(by_name) == {"spiral", "sliding_window", "random"}
        config = SearchConfig()
        assert by_name["spiral"].mean_crops == (config.spiral.T + 1) * config.n_runs
        with (tmp_path / "bench.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["strategy", "mean_dice", "mean_time_s", "mean_crops"]
        assert len(rows) == 4

    def test_empty_cases_rejected(self, sphere_scorers):
        with pytest.raises(ValueError, match="at least one case"):
            benchmark_strategies([], SearchConfig(), sphere_scorers)


class TestAblation:
    def setup_small(self):
        return AblationSetup(phantom=TINY_PHANTOM, eval_cases=2, wsc_samples=2,
                             fsc_samples=2, crops_per_volume=4, wsc_epochs=1,
                             fsc_epochs=1, batch_size=2)

    def base_config(self):
        # Small crops so the tiny phantoms can host them.
        return SearchConfig(crop_size=(6, 6, 4))

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="axis"):
            AblationGrid(axis="bogus", values=(1,))
        with pytest.raises(ValueError, match="at least one value"):
            AblationGrid(axis="tau", values=())

    def test_tau_sweep_rows(self, tmp_path):
        grid = AblationGrid(axis="tau", values=(0.01, 0.05, 0.10))
        report = run_ablation(grid, self.base_config(), self.setup_small(),
                              seed=0, out_dir=tmp_path, timestamp="t0")
        assert [r.status for r in report.rows] == ["ok"] * 3
        assert [r.value for r in report.rows] == ["0.01", "0.05", "0.1"]
        assert report.csv_path.name == "ablation_tau_t0.csv"
        summary = json.loads(report.json_path.read_text())
        assert summary["base_config"]["crop_size"] == [6, 6, 4]
        assert summary["setup"]["eval_cases"] == 2

    def test_failed_value_recorded_and_sweep_continues(self, tmp_path):
        grid = AblationGrid(axis="strategy", values=("spiral", "bogus"))
        report = run_ablation(grid, self.base_config(), self.setup_small(),
                              seed=0, out_dir=tmp_path, timestamp="t1")
        assert report.rows[0].status == "ok"
        assert report.rows[1].status.startswith("failed:")
        assert report.rows[1].mean_dice is None

    def test_reports_reproducible(self, tmp_path):
        grid = AblationGrid(axis="alpha", values=(0.25,))
        r1 = run_ablation(grid, self.base_config(), self.setup_small(),
                          seed=3, out_dir=tmp_path / "a", timestamp="t2")
        r2 = run_ablation(grid, self.base_config(), self.setup_small(),
                          seed=3, out_dir=tmp_path / "b", timestamp="t2")
        assert r1.csv_path.read_bytes() == r2.csv_path.read_bytes()
        assert r1.json_path.read_bytes() == r2.json_path.read_bytes()

    def test_crop_size_axis_retrains_fsc(self, tmp_path):
        grid = AblationGrid(axis="crop_size", values=((6, 6, 4), (4, 4, 2)))
        report = run_ablation(grid, self.base_config(), self.setup_small(),
                              seed=1, out_dir=tmp_path, timestamp="t3")
        assert [r.status for r in report.rows] == ["ok", "ok"]
        assert report.rows[0].value == "6x6x4"
        assert report.rows[1].value == "4x4x2"
