"""Optimistic index policies: radii, selection, mean tracking."""

import itertools
import math

import numpy as np
import pytest

from cmablab.core import Action, Feedback
from cmablab.policies import (
    CmossPolicy,
    CucbPolicy,
    MeanTrackerState,
    cucb_radius,
    lnplus,
    mean_update,
    moss_radius,
    ucb_select,
)


class TestLnplus:
    def test_clamps_below_one(self):
        assert lnplus(0.5) == 0.0

    def test_ln_e(self):
        assert lnplus(math.e) == pytest.approx(1.0, abs=1e-15)

    def test_ln_100(self):
        # frozen: math.log(100)
        assert lnplus(100.0) == pytest.approx(4.605170185988092, abs=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            lnplus(0.0)
        with pytest.raises(ValueError):
            lnplus(-1.0)


class TestRadii:
    def test_moss_unplayed_arm_is_infinite(self):
        assert moss_radius(0, 1e-5) == math.inf

    def test_moss_clamped_to_zero(self):
        assert moss_radius(10, 0.5) == 0.0  # 1/(0.5*10) = 0.2 <= 1

    def test_moss_single_observation(self):
        # frozen: sqrt(ln(1e5))
        assert moss_radius(1, 1e-5) == pytest.approx(3.393070212207556, rel=1e-12)

    def test_moss_rejects_bad_delta(self):
        for delta in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError, match="delta"):
                moss_radius(3, delta)

    def test_cucb_unplayed_arm_is_infinite(self):
        assert cucb_radius(0, 5) == math.inf

    def test_cucb_first_round_is_zero(self):
        assert cucb_radius(5, 1) == 0.0

    def test_cucb_e_squared(self):
        assert cucb_radius(3, math.e ** 2) == pytest.approx(1.0, rel=1e-12)

    def test_cucb_rejects_round_below_one(self):
        with pytest.raises(ValueError, match="round"):
            cucb_radius(3, 0)


def brute_force_topk(scores, k):
    """Oracle: best size-k subset by score sum, lexicographically smallest."""
    best = None
    best_val = -np.inf
    for combo in itertools.combinations(range(len(scores)), k):
        val = sum(scores[i] for i in combo)
        if val > best_val + 1e-12:
            best_val = val
            best = combo
    return set(i + 1 for i in best)


class TestUcbSelect:
    def test_fresh_state_ties_break_low(self):
        state = MeanTrackerState.fresh(5)
        action = ucb_select(state, lambda c: moss_radius(c, 1e-5), 3)
        assert set(action.arms) == {1, 2, 3}

    def test_worked_example(self):
        state = MeanTrackerState(np.array([1, 2, 3], dtype=np.int64),
                                 np.array([0.2, 0.8, 0.5]))
        rho = {1: 0.7, 2: 0.0, 3: 0.1}
        action = ucb_select(state, lambda c: rho[c], 2)
        # mu_bar = (0.9, 0.8, 0.6)
        assert set(action.arms) == {1, 2}

    def test_matches_brute_force_on_random_states(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            m = int(rng.integers(2, 9))
            k = int(rng.integers(1, m + 1))
            state = MeanTrackerState(rng.integers(0, 6, m).astype(np.int64),
                                     rng.random(m))
            action = ucb_select(state, lambda c: cucb_radius(c, 7), k)
            rho = np.array([cucb_radius(int(c), 7) for c in state.counts])
            mu_bar = np.minimum(state.empirical_means + rho, 1.0)
            assert set(action.arms) == brute_force_topk(mu_bar, k)


class TestMeanUpdate:
    def test_first_observation_replaces_initializer(self):
        state = MeanTrackerState.fresh(2)
        mean_update(state, Feedback((1,), np.array([0.0])))
        assert state.counts[0] == 1
        assert state.empirical_means[0] == 0.0
        assert state.counts[1] == 0 and state.empirical_means[1] == 1.0

    def test_running_average(self):
        state = MeanTrackerState(np.array([1], dtype=np.int64), np.array([1.0]))
        mean_update(state, Feedback((1,), np.array([0.0])))
        assert state.counts[0] == 2
        assert state.empirical_means[0] == pytest.approx(0.5, abs=1e-15)

    def test_sequence_matches_arithmetic_mean_oracle(self):
        outcomes = [1.0, 0.0, 0.0, 1.0]
        state = MeanTrackerState.fresh(1)
        for o in outcomes:
            mean_update(state, Feedback((1,), np.array([o])))
        assert state.counts[0] == 4
        assert state.empirical_means[0] == pytest.approx(
            sum(outcomes) / len(outcomes), abs=1e-12)

    def test_random_sequences_match_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            outs = rng.integers(0, 2, int(rng.integers(1, 40))).astype(float)
            state = MeanTrackerState.fresh(1)
            for o in outs:
                mean_update(state, Feedback((1,), np.array([o])))
            assert state.empirical_means[0] == pytest.approx(outs.mean(), abs=1e-12)

    def test_unobserved_arms_untouched(self):
        state = MeanTrackerState(np.array([3, 5], dtype=np.int64),
                                 np.array([0.25, 0.75]))
        mean_update(state, Feedback((1,), np.array([1.0])))
        assert state.counts[1] == 5 and state.empirical_means[1] == 0.75


class TestPolicyClasses:
    def test_same_selection_when_radii_are_exactly_zero(self):
        """The two index policies differ only in the radius rule: with both
        radii identically zero they pick identical actions."""
        rng = np.random.default_rng(9)
        for _ in range(50):
            m = int(rng.integers(3, 12))
            k = int(rng.integers(1, m + 1))
            counts = rng.integers(2, 9, m).astype(np.int64)  # >= 2 observations
            means = rng.random(m)
            cmoss = CmossPolicy(m, k, delta=0.5)  # delta*T_i >= 1 -> radius 0
            cucb = CucbPolicy(m, k)
            for policy in (cmoss, cucb):
                policy.state.counts[:] = counts
                policy.state.empirical_means[:] = means
            assert set(cmoss.select(1)) == set(cucb.select(1))  # t=1 -> ln t = 0

    def test_policy_update_only_touches_observed(self):
        policy = CmossPolicy(4, 2, delta=1e-5)
        policy.update(np.array([1, 3], dtype=np.int64), np.array([1.0, 0.0]))
        assert policy.state.counts.tolist() == [0, 1, 0, 1]
        assert policy.state.empirical_means.tolist() == [1.0, 1.0, 1.0, 0.0]

    def test_cmoss_rejects_bad_delta(self):
        with pytest.raises(ValueError, match="delta"):
            CmossPolicy(3, 1, delta=0.0)

    def test_select_returns_k_distinct_arms(self):
        rng = np.random.default_rng(5)
        for policy in (CmossPolicy(6, 3, 1e-5), CucbPolicy(6, 3)):
            for t in range(1, 30):
                idx = policy.select(t)
                assert len(set(idx.tolist())) == 3
                policy.update(idx, rng.integers(0, 2, 3).astype(float))
