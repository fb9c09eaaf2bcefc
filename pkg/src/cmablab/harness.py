"""Experiment runner: (algorithm x instance x runs) with timing, cross-run
aggregation and machine-readable results.

Seeding contract: the instance's means use the child stream
(base_seed, 0); replication r (1-based) uses (base_seed, r, 0) for the
environment and (base_seed, r, 1) for policy randomness.  Every algorithm
run under one base_seed therefore faces the same instance and the same
noise table, and repeating a config reproduces its outputs byte for byte.

Output files per prefix:
  <prefix>.csv           per-round table ``round,mean_cum_regret,std``
  <prefix>.summary.json  deterministic summary (config echo + regret stats)
  <prefix>.timing.json   wall-clock stats; machine-dependent, excluded from
                         the determinism guarantee
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .core import ProblemInstance, _reward_from_indices, optimal_action
from .data import ExperimentConfig, build_means, serialize_config
from .env import EnvironmentState, RunRecord
from .policies import make_policy


def child_rng(base_seed: int, *key: int) -> np.random.Generator:
    """Independent stream derived from (base_seed, key)."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=key))


@dataclass(frozen=True)
class AggregateResult:
    """Cross-replication aggregate of one experiment."""

    config: ExperimentConfig
    means: np.ndarray
    per_round_mean_regret: np.ndarray
    per_round_std: np.ndarray
    final_regret_mean: float
    final_regret_std: float
    runtime_mean_seconds: float
    per_round_runtime_seconds: float


def _run_one(instance: ProblemInstance, policy, env: EnvironmentState,
             horizon: int) -> RunRecord:
    record = RunRecord(instance)
    means = instance.means
    mode = instance.feedback_mode
    r_star = _reward_from_indices(means, optimal_action(instance).indices, mode)
    semi = mode == "semi_bandit"
    step = env._step_semi_idx0 if semi else env._step_cascade_idx0
    perf = time.perf_counter
    for t in range(1, horizon + 1):
        t0 = perf()
        idx0 = policy.select(t)
        t1 = perf()
        arms0, outcomes = step(idx0)
        gap_t = r_star - _reward_from_indices(means, idx0, mode)
        if arms0.shape[0]:
            t2 = perf()
            policy.update(arms0, outcomes)
            t3 = perf()
        else:
            t2 = t3 = perf()  # defensive: empty feedback leaves state alone
        record.append(gap_t, (t1 - t0) + (t3 - t2))
    return record


def run_experiment(config: ExperimentConfig) -> AggregateResult:
    """Run all replications of one configuration and aggregate them."""
    kernels.warmup()
    means = build_means(config, child_rng(config.base_seed, 0))
    instance = ProblemInstance(config.m, config.k, means, config.feedback_mode,
                               config.examination_order)
    T = config.horizon
    curves = np.empty((config.runs, T))
    totals = np.empty(config.runs)
    for r in range(1, config.runs + 1):
        policy = make_policy(config.algorithm, config.m, config.k,
                             delta=config.delta, gamma=config.gamma_exp3m,
                             rng=child_rng(config.base_seed, r, 1))
        env = EnvironmentState(instance, child_rng(config.base_seed, r, 0))
        record = _run_one(instance, policy, env, T)
        curves[r - 1] = record.cumulative_regret
        totals[r - 1] = record.wall_time_total
    mean_curve = curves.mean(axis=0)
    std_curve = curves.std(axis=0)  # population std across replications
    runtime_mean = float(totals.mean())
    return AggregateResult(
        config=config,
        means=means,
        per_round_mean_regret=mean_curve,
        per_round_std=std_curve,
        final_regret_mean=float(mean_curve[-1]),
        final_regret_std=float(std_curve[-1]),
        runtime_mean_seconds=runtime_mean,
        per_round_runtime_seconds=runtime_mean / T,
    )


def emit_results(result: AggregateResult, path_prefix) -> list[Path]:
    """Write the per-round table, summary and timing files for one result."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)

    csv_path = prefix.with_name(prefix.name + ".csv")
    lines = ["round,mean_cum_regret,std"]
    mean_curve = result.per_round_mean_regret
    std_curve = result.per_round_std
    lines.extend(
        f"{t},{float(mean_curve[t - 1])!r},{float(std_curve[t - 1])!r}"
        for t in range(1, mean_curve.shape[0] + 1))
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    summary_path = prefix.with_name(prefix.name + ".summary.json")
    summary = {
        "config": serialize_config(result.config).strip().splitlines(),
        "arm_means": [float(v) for v in result.means],
        "final_regret_mean": result.final_regret_mean,
        "final_regret_std": result.final_regret_std,
        "rounds": int(result.per_round_mean_regret.shape[0]),
        "runs": result.config.runs,
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")

    timing_path = prefix.with_name(prefix.name + ".timing.json")
    timing = {
        "runtime_mean_seconds": result.runtime_mean_seconds,
        "per_round_runtime_seconds": result.per_round_runtime_seconds,
        "note": "wall-clock around policy select+update; machine-dependent",
    }
    timing_path.write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    return [csv_path, summary_path, timing_path]
