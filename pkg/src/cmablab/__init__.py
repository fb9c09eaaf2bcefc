"""Combinatorial multi-armed bandit laboratory.

Policies (two optimistic index rules, exponential weights with capping,
follow-the-regularized-leader), semi-bandit and cascading Bernoulli
environments, and a benchmark harness with seeded, reproducible runs.
"""

from .core import (
    AS_GIVEN,
    ASCENDING,
    CASCADE_CONJUNCTIVE,
    CASCADE_DISJUNCTIVE,
    DESCENDING,
    SEMI_BANDIT,
    Action,
    Feedback,
    ProblemInstance,
    gap,
    optimal_action,
    reward_mean,
)
from .data import ExperimentConfig, MeanSource, parse_config, serialize_config
from .env import EnvironmentState, RunRecord, record_round, step_cascading, step_semi_bandit
from .harness import AggregateResult, child_rng, emit_results, run_experiment
from .kernels import BACKEND
from .policies import (
    CmossPolicy,
    CucbPolicy,
    Exp3mPolicy,
    HybridPolicy,
    Exp3mState,
    HybridState,
    MeanTrackerState,
    cucb_radius,
    depround,
    exp3m_alpha,
    exp3m_probabilities,
    exp3m_round,
    exp3m_update,
    hybrid_estimator,
    hybrid_gamma,
    hybrid_round,
    lnplus,
    make_policy,
    mean_update,
    moss_radius,
    ucb_select,
)
from .solvers import SolverError, SolverOptions, bisect, capped_simplex_argmin

__version__ = "0.1.0"
