"""Problem instances, actions, feedback and regret gaps.

Arms are identified by 1-based indices in the public API; the ``indices``
properties expose 0-based numpy views for array code.  All types here are
immutable after construction and safe to share across replications.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels

SEMI_BANDIT = "semi_bandit"
CASCADE_DISJUNCTIVE = "cascade_disjunctive"
CASCADE_CONJUNCTIVE = "cascade_conjunctive"
FEEDBACK_MODES = (SEMI_BANDIT, CASCADE_DISJUNCTIVE, CASCADE_CONJUNCTIVE)
CASCADE_MODES = (CASCADE_DISJUNCTIVE, CASCADE_CONJUNCTIVE)

DESCENDING = "descending"
ASCENDING = "ascending"
AS_GIVEN = "as_given"
EXAMINATION_ORDERS = (DESCENDING, ASCENDING, AS_GIVEN)


@dataclass(frozen=True)
class ProblemInstance:
    """Ground truth of one bandit problem.

    ``m`` arms with Bernoulli means in [0, 1], a cardinality budget ``k``
    and the feedback regime.  ``examination_order`` matters only in the
    cascade modes.
    """

    m: int
    k: int
    means: np.ndarray
    feedback_mode: str = SEMI_BANDIT
    examination_order: str = DESCENDING

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not 1 <= self.k <= self.m:
            raise ValueError(f"k must satisfy 1 <= k <= m, got k={self.k}, m={self.m}")
        means = np.asarray(self.means, dtype=np.float64)
        if means.shape != (self.m,):
            raise ValueError(f"means must have shape ({self.m},), got {means.shape}")
        if np.any(means < 0.0) or np.any(means > 1.0) or not np.all(np.isfinite(means)):
            raise ValueError("every mean must lie in [0, 1]")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ValueError(f"unknown feedback_mode {self.feedback_mode!r}")
        if self.examination_order not in EXAMINATION_ORDERS:
            raise ValueError(f"unknown examination_order {self.examination_order!r}")
        means = means.copy()
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def is_cascade(self) -> bool:
        return self.feedback_mode in CASCADE_MODES

    def validate_action(self, action: "Action") -> None:
        if len(action.arms) > self.k:
            raise ValueError(
                f"action has {len(action.arms)} arms, budget is k={self.k}")
        if any(a > self.m for a in action.arms):
            raise ValueError(f"arm index out of range [1..{self.m}]: {action.arms}")


@dataclass(frozen=True)
class Action:
    """An ordered subset of distinct 1-based arm indices."""

    arms: tuple[int, ...]

    def __post_init__(self):
        arms = tuple(int(a) for a in self.arms)
        if not arms:
            raise ValueError("action must contain at least one arm")
        if len(set(arms)) != len(arms):
            raise ValueError(f"duplicate arm indices in action: {arms}")
        if any(a < 1 for a in arms):
            raise ValueError(f"arm indices are 1-based, got {arms}")
        object.__setattr__(self, "arms", arms)

    @classmethod
    def from_indices(cls, idx0: Iterable[int]) -> "Action":
        """Build from 0-based indices."""
        return cls(tuple(int(i) + 1 for i in idx0))

    @property
    def indices(self) -> np.ndarray:
        """0-based index array."""
        return np.asarray(self.arms, dtype=np.int64) - 1

    def __len__(self) -> int:
        return len(self.arms)


@dataclass(frozen=True)
class Feedback:
    """Observed (arm, outcome) pairs of one round; arms are the triggered set."""

    arms: tuple[int, ...]
    outcomes: np.ndarray = field(repr=False)

    def __post_init__(self):
        arms = tuple(int(a) for a in self.arms)
        if len(set(arms)) != len(arms):
            raise ValueError("an arm may appear at most once in feedback")
        outcomes = np.asarray(self.outcomes, dtype=np.float64)
        if outcomes.shape != (len(arms),):
            raise ValueError("one outcome per observed arm required")
        if not np.all((outcomes == 0.0) | (outcomes == 1.0)):
            raise ValueError("outcomes must be 0 or 1")
        outcomes.setflags(write=False)
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "outcomes", outcomes)

    @classmethod
    def from_indices(cls, idx0: np.ndarray, outcomes: np.ndarray) -> "Feedback":
        return cls(tuple(int(i) + 1 for i in idx0), outcomes)

    @property
    def observed(self) -> tuple[tuple[int, int], ...]:
        return tuple((a, int(o)) for a, o in zip(self.arms, self.outcomes))

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.arms, dtype=np.int64) - 1

    def __len__(self) -> int:
        return len(self.arms)


def _reward_from_indices(means: np.ndarray, idx0: np.ndarray, mode: str) -> float:
    # trusted fast path shared with the experiment runner
    mu = means[idx0]
    if mode == SEMI_BANDIT:
        return float(mu.sum())
    if mode == CASCADE_DISJUNCTIVE:
        return float(1.0 - np.prod(1.0 - mu))
    return float(np.prod(mu))


def reward_mean(action: Action, instance: ProblemInstance) -> float:
    """Expected reward of ``action`` under the instance's feedback mode.

    semi_bandit: sum of means; cascade_disjunctive: click probability
    1 - prod(1 - mu); cascade_conjunctive: prod(mu).
    """
    instance.validate_action(action)
    return _reward_from_indices(instance.means, action.indices, instance.feedback_mode)


def optimal_action(instance: ProblemInstance) -> Action:
    """The k arms with the largest true means, ties to the lowest index."""
    return Action.from_indices(kernels.topk_indices(instance.means, instance.k))


def gap(action: Action, instance: ProblemInstance) -> float:
    """Expected-reward gap of ``action`` against the optimal action."""
    return reward_mean(optimal_action(instance), instance) - reward_mean(action, instance)
