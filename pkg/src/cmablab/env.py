"""Stochastic Bernoulli environments and per-round regret accounting.

Every round the environment draws a full row of m uniforms from its stream
and reveals only the triggered arms, so the noise sequence is identical
for any two policies sharing a seed.  Regret always comes from the true
means; realized noise never enters it.
"""

from __future__ import annotations

import numpy as np

from .core import (
    ASCENDING,
    CASCADE_DISJUNCTIVE,
    DESCENDING,
    SEMI_BANDIT,
    Action,
    Feedback,
    ProblemInstance,
    gap,
)

_NOISE_CHUNK = 2048  # rounds of uniforms drawn per generator call


class EnvironmentState:
    """One replication's environment: instance, seeded stream, round counter."""

    def __init__(self, instance: ProblemInstance, rng):
        self.instance = instance
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.round = 1
        self._buf = None
        self._pos = 0

    def _noise_row(self) -> np.ndarray:
        # buffered draws; consumption order matches one row of m per round
        if self._buf is None or self._pos >= self._buf.shape[0]:
            self._buf = self.rng.random((_NOISE_CHUNK, self.instance.m))
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row

    # trusted fast paths used by the experiment runner -----------------

    def _step_semi_idx0(self, idx0: np.ndarray):
        row = self._noise_row()
        means = self.instance.means
        outcomes = (row[idx0] < means[idx0]).astype(np.float64)
        self.round += 1
        return idx0, outcomes

    def _step_cascade_idx0(self, idx0: np.ndarray):
        inst = self.instance
        order = inst.examination_order
        if order == DESCENDING:
            idx0 = idx0[np.argsort(-inst.means[idx0], kind="stable")]
        elif order == ASCENDING:
            idx0 = idx0[np.argsort(inst.means[idx0], kind="stable")]
        row = self._noise_row()
        outcomes = (row[idx0] < inst.means[idx0]).astype(np.float64)
        self.round += 1
        stop = 1.0 if inst.feedback_mode == CASCADE_DISJUNCTIVE else 0.0
        hits = np.nonzero(outcomes == stop)[0]
        if hits.size:
            n = int(hits[0]) + 1  # examined prefix includes the stopping arm
            return idx0[:n], outcomes[:n]
        # no stopping outcome: the whole list was examined and observed
        # (disjunctive click-free rounds must record their zeros, or arms
        # examined late can never log a failure and learning deadlocks)
        return idx0, outcomes


def step_semi_bandit(state: EnvironmentState, action: Action) -> Feedback:
    """Play ``action`` under semi-bandit feedback: every played arm's
    Bernoulli outcome is observed."""
    if state.instance.feedback_mode != SEMI_BANDIT:
        raise ValueError(f"environment is in {state.instance.feedback_mode} mode")
    state.instance.validate_action(action)
    idx0, outcomes = state._step_semi_idx0(action.indices)
    return Feedback.from_indices(idx0, outcomes)


def step_cascading(state: EnvironmentState, action: Action) -> Feedback:
    """Play ``action`` under cascading feedback.

    The action's arms are examined in the instance's order of true means
    (``as_given`` keeps the policy's ordering; ties keep it too).
    Disjunctive: examine until the first 1; conjunctive: examine until the
    first 0.  Every examined arm's outcome is observed, so a pass without
    a stopping outcome observes the whole list.
    """
    if not state.instance.is_cascade:
        raise ValueError(f"environment is in {state.instance.feedback_mode} mode")
    state.instance.validate_action(action)
    idx0, outcomes = state._step_cascade_idx0(action.indices)
    return Feedback.from_indices(idx0, outcomes)


def step(state: EnvironmentState, action: Action) -> Feedback:
    """Mode-dispatching step."""
    if state.instance.feedback_mode == SEMI_BANDIT:
        return step_semi_bandit(state, action)
    return step_cascading(state, action)


class RunRecord:
    """Per-round gaps, their running sum and policy wall time for one run."""

    def __init__(self, instance: ProblemInstance):
        self.instance = instance
        self._gaps: list[float] = []
        self._cum: list[float] = []
        self._running = 0.0
        self._elapsed = 0.0

    def append(self, gap_value: float, elapsed: float) -> None:
        self._running += gap_value
        self._gaps.append(gap_value)
        self._cum.append(self._running)
        self._elapsed += elapsed

    @property
    def per_round_gap(self) -> np.ndarray:
        return np.asarray(self._gaps)

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.asarray(self._cum)

    @property
    def wall_time_total(self) -> float:
        return self._elapsed

    @property
    def wall_time_per_round(self) -> float:
        return self._elapsed / len(self._gaps) if self._gaps else 0.0

    def __len__(self) -> int:
        return len(self._gaps)


def record_round(record: RunRecord, action: Action, elapsed: float) -> RunRecord:
    """Append one round's regret gap and timing sample."""
    record.instance.validate_action(action)
    record.append(gap(action, record.instance), elapsed)
    return record
