import csv
import json
import math

import numpy as np
import pytest

from plantedbisection import ChainConfig, ConfigError, num_assignments, ring_size
from plantedbisection.harness import (
    ExperimentConfig,
    load_config,
    run_coverage_experiment,
    run_detection_experiment,
    run_experiment,
    run_recovery_experiment,
)
from plantedbisection.io import read_posterior_csv


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_from_dict_roundtrip(self):
        d = {
            "task": "coverage",
            "n_grid": [3, 4],
            "params": {"kind": "cd", "values": [[2.0, 0.5]]},
            "replicates": 7,
            "base_seed": 3,
            "level": {"rule": "bn_over_n"},
            "k_n": {"rule": "beta", "value": 0.25},
            "engine": "exact",
            "chain": {"steps": 1000, "burn_in": 100, "thin": 1},
            "bounds": {"C": 3.0},
        }
        cfg = ExperimentConfig.from_dict(d)
        assert cfg.cells() == [(3, 2 / 3, 0.5 / 3), (4, 0.5, 0.125)]
        assert cfg.k_n(4) == 1 and cfg.k_n(8) == 2
        assert cfg.credible_deficit(4) == pytest.approx(1 / 35 / 4)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.C == 3.0 and cfg.chain.steps == 1000

    def test_ab_parametrisation(self):
        cfg = ExperimentConfig(task="recovery", n_grid=(10,), param_kind="ab",
                               param_values=((2.0, 1.0),))
        (n, p, q), = cfg.cells()
        assert p == pytest.approx(2 * math.log(10) / 10)

    @pytest.mark.parametrize("bad", [
        {"task": "nope", "n_grid": [3]},
        {"task": "recovery", "n_grid": []},
        {"task": "recovery", "n_grid": [3], "params": {"kind": "cd", "values": [[5.0, 1.0]]}},
        {"task": "recovery", "n_grid": [3], "replicates": 0},
        {"task": "recovery", "n_grid": [3], "k_n": {"rule": "beta", "value": 1.5}},
        {"task": "recovery", "n_grid": [3], "extra": 1},
        {"task": "recovery"},
        {"task": "recovery", "n_grid": [3], "chain": {"steps": 10, "burn_in": 20}},
        {"task": "recovery", "n_grid": [3], "fixed_theta0": "01x"},
    ])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)

    def test_load_config_errors(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_hash_ignores_output_dir(self):
        a = ExperimentConfig(task="recovery", n_grid=(3,), output_dir="x")
        b = ExperimentConfig(task="recovery", n_grid=(3,), output_dir="y")
        c = ExperimentConfig(task="recovery", n_grid=(3,), base_seed=1)
        assert a.hash() == b.hash() != c.hash()

    def test_k_n_rules(self):
        base = dict(task="coverage", n_grid=(9,))
        assert ExperimentConfig(**base, kn_rule="zero").k_n(9) == 0
        assert ExperimentConfig(**base, kn_rule="sqrt").k_n(9) == 3
        assert ExperimentConfig(**base, kn_rule="fixed", kn_value=7).k_n(9) == 4


class TestRecovery:
    def test_perfect_separation(self):
        cfg = ExperimentConfig(task="recovery", n_grid=(4,), param_values=((1.0, 0.0),),
                               replicates=15)
        res = run_recovery_experiment(cfg)
        assert res.aggregate("map_is_truth")["mean"] == 1.0
        assert np.all(res.values("off_mass") == 0.0)

    def test_uninformative(self):
        cfg = ExperimentConfig(task="recovery", n_grid=(4,), param_values=((0.3, 0.3),),
                               replicates=10)
        res = run_recovery_experiment(cfg)
        assert np.allclose(res.values("post_mass_theta0"), 1 / num_assignments(4), rtol=1e-12)

    def test_off_mass_within_bound(self):
        cfg = ExperimentConfig(task="recovery", n_grid=(5,), param_values=((0.95, 0.02),),
                               replicates=100, base_seed=77)
        agg = run_recovery_experiment(cfg).aggregate("off_mass")
        assert agg["bound"] < 0.5
        assert agg["mean"] <= agg["bound"] + 3 * agg["stderr"]


class TestDetection:
    def test_top_ring_small_with_strong_signal(self):
        cfg = ExperimentConfig(task="detection", n_grid=(6,), param_values=((0.9, 0.1),),
                               replicates=30, kn_rule="fixed", kn_value=3)
        res = run_detection_experiment(cfg)
        assert res.aggregate("far_mass")["mean"] < 0.5

    def test_uninformative_ring_ratio(self):
        n, k_n = 5, 1
        cfg = ExperimentConfig(task="detection", n_grid=(n,), param_values=((0.4, 0.4),),
                               replicates=5, kn_rule="fixed", kn_value=k_n)
        res = run_detection_experiment(cfg)
        expected = sum(ring_size(n, k) for k in range(k_n, n // 2 + 1)) / num_assignments(n)
        assert np.allclose(res.values("far_mass"), expected, rtol=1e-12)

    def test_overlap_consistent_with_map(self):
        cfg = ExperimentConfig(task="detection", n_grid=(4,), param_values=((0.8, 0.2),),
                               replicates=40, base_seed=5)
        res = run_detection_experiment(cfg)
        hit = res.values("map_is_truth") == 1.0
        assert hit.any()
        assert np.all(res.values("map_overlap")[hit] == 1.0)


class TestCoverage:
    def test_zero_deficit_full_coverage(self):
        cfg = ExperimentConfig(task="coverage", n_grid=(3,), param_values=((0.6, 0.4),),
                               replicates=20, level_rule="fixed", level_value=0.0)
        res = run_coverage_experiment(cfg)
        assert res.aggregate("theta0_in_D")["mean"] == 1.0
        assert np.all(res.values("size_D") == num_assignments(3))

    def test_zero_radius_rows_identical(self):
        cfg = ExperimentConfig(task="coverage", n_grid=(4,), param_values=((0.7, 0.3),),
                               replicates=40, level_rule="fixed", level_value=0.3,
                               kn_rule="zero")
        res = run_coverage_experiment(cfg)
        assert np.array_equal(res.values("theta0_in_D"), res.values("theta0_in_C"))

    def test_regime_indicators_recorded(self):
        cfg = ExperimentConfig(task="coverage", n_grid=(3,), param_values=((0.6, 0.4),),
                               replicates=2)
        res = run_coverage_experiment(cfg)
        assert res.aggregate("n_abs_diff")["mean"] == pytest.approx(0.6)

    def test_minimal_diameter_construction(self):
        cfg = ExperimentConfig(task="coverage", n_grid=(3,), param_values=((0.8, 0.2),),
                               replicates=20, level_rule="fixed", level_value=0.2,
                               construction="minimal-diameter")
        res = run_coverage_experiment(cfg)
        assert res.aggregate("level_achieved")["mean"] >= 0.8


class TestOutputs:
    @pytest.fixture
    def cfg(self):
        return ExperimentConfig(task="coverage", n_grid=(3, 4), param_values=((0.8, 0.2),),
                                replicates=12, base_seed=99, level_rule="fixed",
                                level_value=0.2, kn_rule="fixed", kn_value=1)

    def test_files_and_manifest(self, tmp_path, cfg):
        res = run_experiment(cfg, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config_sha256"] == cfg.hash()
        assert manifest["base_seed"] == 99
        assert manifest["code_version"]
        assert set(manifest["files"]) == {"rows.csv", "aggregates.csv"}
        assert ExperimentConfig.from_dict(manifest["config"]) == cfg
        rows = read_rows(tmp_path / "rows.csv")
        assert len(rows) == len(res.rows)
        assert list(rows[0]) == ["task", "n", "p", "q", "replicate", "seed", "statistic",
                                 "value", "bound", "vacuous", "wall_time"]

    def test_byte_deterministic(self, tmp_path, cfg):
        run_experiment(cfg, tmp_path / "a")
        run_experiment(cfg, tmp_path / "b")

        def strip(path):
            return [{k: v for k, v in r.items() if k != "wall_time"} for r in read_rows(path)]

        assert strip(tmp_path / "a" / "rows.csv") == strip(tmp_path / "b" / "rows.csv")
        assert (tmp_path / "a" / "aggregates.csv").read_bytes() == \
            (tmp_path / "b" / "aggregates.csv").read_bytes()

    def test_replicate_seeds_distinct(self, cfg):
        res = run_experiment(cfg)
        seeds = {(r.n, r.replicate): r.seed for r in res.rows}
        assert all(s == 99 + rep for (_, rep), s in seeds.items())

    def test_infeasible_cell_skipped(self, tmp_path):
        cfg = ExperimentConfig(task="recovery", n_grid=(3, 6), replicates=2, cap=100)
        res = run_experiment(cfg, tmp_path)
        assert [c["n"] for c in res.skipped] == [6]
        assert "exceeds cap" in res.skipped[0]["reason"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["skipped"] == res.skipped
        assert {r.n for r in res.rows} == {3}

    def test_posterior_dump(self, tmp_path):
        cfg = ExperimentConfig(task="posterior-dump", n_grid=(3,), replicates=2)
        res = run_experiment(cfg, tmp_path)
        dumps = [f for f in res.files if f.startswith("posterior_")]
        assert len(dumps) == 2
        table = read_posterior_csv(tmp_path / dumps[0])
        assert table.weights.sum() == pytest.approx(1.0)

    def test_bound_check(self):
        cfg = ExperimentConfig(task="bound-check", n_grid=(6, 32), param_values=((0.7, 0.1),))
        res = run_experiment(cfg)
        vals = {(r.n, r.statistic): r for r in res.rows}
        assert vals[(32, "recovery_mass_bound")].value == pytest.approx(0.02712704044325754)
        assert not vals[(32, "recovery_mass_bound")].vacuous
        assert vals[(6, "recovery_mass_bound")].vacuous

    def test_fixed_theta0(self):
        cfg = ExperimentConfig(task="recovery", n_grid=(3,), param_values=((1.0, 0.0),),
                               replicates=3, fixed_theta0="block")
        res = run_experiment(cfg)
        assert np.all(res.values("post_mass_theta0") == 1.0)
        with pytest.raises(ConfigError):
            ExperimentConfig(task="recovery", n_grid=(3,), fixed_theta0="0011").theta0(3, 0)


class TestEngines:
    def test_mcmc_engine_runs(self):
        cfg = ExperimentConfig(task="coverage", n_grid=(4,), param_values=((0.8, 0.2),),
                               replicates=5, engine="mcmc",
                               chain=ChainConfig(steps=30_000, burn_in=3000, thin=3, chains=2))
        res = run_experiment(cfg)
        assert len(res.values("theta0_in_D")) == 5

    @pytest.mark.slow
    def test_engine_agreement(self):
        common = dict(task="coverage", n_grid=(4,), param_values=((0.8, 0.2),),
                      replicates=500, base_seed=4000, level_rule="fixed", level_value=0.1,
                      kn_rule="zero")
        exact = run_experiment(ExperimentConfig(**common)).aggregate("theta0_in_D")["mean"]
        mcmc = run_experiment(ExperimentConfig(**common, engine="mcmc")).aggregate(
            "theta0_in_D")["mean"]
        assert abs(exact - mcmc) < 0.03
