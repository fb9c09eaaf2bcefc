"""Experiment runner, result emission, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from cmablab.cli import main
from cmablab.data import parse_config
from cmablab.harness import child_rng, emit_results, run_experiment


def tiny_config(**kw):
    defaults = dict(algorithm="cmoss", m=5, k=2, horizon=50, runs=2, seed=11)
    defaults.update(kw)
    return parse_config("", **defaults)


class TestRunExperiment:
    def test_equal_means_give_zero_regret(self):
        cfg = tiny_config(means="uniform(0.3,0.3000001)")
        res = run_experiment(cfg)
        assert res.final_regret_mean == pytest.approx(0.0, abs=1e-4)

    def test_single_run_has_zero_std(self):
        cfg = tiny_config(runs=1)
        res = run_experiment(cfg)
        assert np.all(res.per_round_std == 0.0)
        assert res.final_regret_std == 0.0

    def test_mean_std_match_independent_recomputation(self):
        cfg = tiny_config(algorithm="cucb", horizon=200, runs=4)
        res = run_experiment(cfg)
        # re-run each replication by hand through the same public machinery
        from cmablab.core import ProblemInstance, optimal_action, reward_mean, Action
        from cmablab.data import build_means
        from cmablab.env import EnvironmentState, step_semi_bandit
        from cmablab.policies import CucbPolicy
        means = build_means(cfg, child_rng(cfg.base_seed, 0))
        inst = ProblemInstance(cfg.m, cfg.k, means)
        r_star = reward_mean(optimal_action(inst), inst)
        curves = []
        for r in range(1, cfg.runs + 1):
            env = EnvironmentState(inst, child_rng(cfg.base_seed, r, 0))
            policy = CucbPolicy(cfg.m, cfg.k)
            cum, total = [], 0.0
            for t in range(1, cfg.horizon + 1):
                idx0 = policy.select(t)
                fb = step_semi_bandit(env, Action.from_indices(idx0))
                total += r_star - reward_mean(Action.from_indices(idx0), inst)
                policy.update(fb.indices, fb.outcomes)
                cum.append(total)
            curves.append(cum)
        curves = np.array(curves)
        assert res.per_round_mean_regret == pytest.approx(curves.mean(axis=0), abs=1e-9)
        assert res.per_round_std == pytest.approx(curves.std(axis=0), abs=1e-9)

    def test_regret_curve_nondecreasing(self):
        res = run_experiment(tiny_config(algorithm="exp3m", horizon=300))
        assert np.all(np.diff(res.per_round_mean_regret) >= -1e-12)

    def test_deterministic_across_repeats(self):
        cfg = tiny_config(algorithm="hybrid", m=6, k=2, horizon=120, runs=2)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        assert np.array_equal(a.per_round_mean_regret, b.per_round_mean_regret)
        assert np.array_equal(a.per_round_std, b.per_round_std)

    def test_cascade_modes_run(self):
        for mode in ("cascade_disjunctive", "cascade_conjunctive"):
            for order in ("descending", "ascending", "as_given"):
                cfg = tiny_config(algorithm="cucb", feedback=mode, order=order,
                                  horizon=80, runs=1)
                res = run_experiment(cfg)
                assert res.per_round_mean_regret.shape == (80,)


class TestEmitResults:
    def test_files_shape_and_consistency(self, tmp_path):
        cfg = tiny_config(horizon=40)
        res = run_experiment(cfg)
        csv_path, summary_path, timing_path = emit_results(res, tmp_path / "out")
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "round,mean_cum_regret,std"
        assert len(lines) == 41  # header + one row per round
        last = lines[-1].split(",")
        assert int(last[0]) == 40
        summary = json.loads(summary_path.read_text())
        assert float(last[1]) == summary["final_regret_mean"]
        timing = json.loads(timing_path.read_text())
        assert timing["runtime_mean_seconds"] > 0

    def test_reemission_is_byte_identical(self, tmp_path):
        res = run_experiment(tiny_config(horizon=30))
        p1 = emit_results(res, tmp_path / "a")
        p2 = emit_results(res, tmp_path / "b")
        for a, b in zip(p1, p2):
            assert a.read_bytes() == b.read_bytes()


class TestSeedContract:
    def test_child_streams_are_independent(self):
        a = child_rng(5, 1, 0).random(10)
        b = child_rng(5, 1, 1).random(10)
        c = child_rng(5, 2, 0).random(10)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.array_equal(a, child_rng(5, 1, 0).random(10))

    def test_algorithms_share_instance_and_noise(self):
        """Same base seed: both index policies face the same means and the
        same noise table, so equal action sequences accrue equal regret."""
        cfg_a = tiny_config(algorithm="cmoss", m=4, k=4, horizon=60)
        cfg_b = tiny_config(algorithm="cucb", m=4, k=4, horizon=60)
        # k = m: every policy must play all arms, so regret sequences match
        res_a = run_experiment(cfg_a)
        res_b = run_experiment(cfg_b)
        assert np.array_equal(res_a.per_round_mean_regret,
                              res_b.per_round_mean_regret)


class TestCli:
    def test_run_writes_files(self, tmp_path):
        rc = main(["run", "--algorithm", "cucb", "--m", "4", "--k", "2",
                   "--horizon", "30", "--runs", "1", "--seed", "3",
                   "--out", str(tmp_path / "r")])
        assert rc == 0
        assert (tmp_path / "r.csv").exists()
        assert (tmp_path / "r.summary.json").exists()
        assert (tmp_path / "r.timing.json").exists()

    def test_run_with_config_file(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text(
            "algorithm = cmoss\nm = 4\nk = 2\nhorizon = 25\nruns = 1\n"
            f"seed = 5\nout = {tmp_path / 'c'}\n")
        assert main(["run", "--config", str(cfgfile)]) == 0
        assert (tmp_path / "c.csv").exists()

    def test_cli_override_beats_config(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("algorithm = cmoss\nm = 4\nk = 2\nhorizon = 25\n"
                           f"runs = 1\nout = {tmp_path / 'd'}\n")
        rc = main(["run", "--config", str(cfgfile), "--horizon", "10"])
        assert rc == 0
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert len(lines) == 11

    def test_compare_shared_seed_table(self, tmp_path):
        rc = main(["compare", "--algorithms", "cmoss,cucb", "--m", "4",
                   "--k", "2", "--horizon", "40", "--runs", "1", "--seed", "9",
                   "--out", str(tmp_path / "cmp")])
        assert rc == 0
        table = (tmp_path / "cmp_compare.csv").read_text().splitlines()
        assert table[0] == "algorithm,final_regret_mean,final_regret_std"
        assert len(table) == 3
        assert (tmp_path / "cmp_cmoss.csv").exists()
        assert (tmp_path / "cmp_cucb.csv").exists()

    def test_sweep_varies_k(self, tmp_path):
        rc = main(["sweep", "--vary", "k", "--values", "1,2,3",
                   "--algorithm", "cucb", "--m", "5", "--horizon", "20",
                   "--runs", "1", "--out", str(tmp_path / "s")])
        assert rc == 0
        table = (tmp_path / "s_sweep_k.csv").read_text().splitlines()
        assert table[0] == "k,final_regret_mean,final_regret_std"
        assert len(table) == 4

    def test_invalid_config_is_clean_error(self, capsys):
        rc = main(["run", "--m", "3", "--k", "9"])
        assert rc == 1
        assert "k" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus", "1"])
        assert exc.value.code != 0

    def test_help_exits_zero(self):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "cmablab", "run", "--m", "3", "--k", "1",
             "--horizon", "10", "--runs", "1", "--out", str(tmp_path / "m")],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
