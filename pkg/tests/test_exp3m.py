"""Exponential-weights policy: capping threshold, probabilities, updates."""

import math

import numpy as np
import pytest

from cmablab.core import Action
from cmablab.policies import (
    Exp3mPolicy,
    Exp3mState,
    exp3m_alpha,
    exp3m_probabilities,
    exp3m_round,
    exp3m_update,
)


def alpha_residual(weights, alpha, k, gamma):
    """Residual of the threshold equation, recomputed from scratch."""
    m = len(weights)
    capped = weights >= alpha
    denom = alpha * capped.sum() + weights[~capped].sum()
    c = (1.0 / k - gamma / m) / (1.0 - gamma)
    return abs(alpha / denom - c)


class TestAlpha:
    def test_single_capped_weight_closed_form(self):
        w = np.array([10.0, 1.0, 1.0, 1.0])
        alpha = exp3m_alpha(w, k=2, gamma=0.01)
        # frozen: c = (1/2 - 0.0025)/0.99, alpha = 3c/(1-c)
        c = (0.5 - 0.0025) / 0.99
        assert alpha == pytest.approx(3 * c / (1 - c), rel=1e-14)
        assert alpha == pytest.approx(3.0304568527918776, rel=1e-14)
        assert alpha_residual(w, alpha, 2, 0.01) < 1e-12

    def test_degenerate_equal_weights(self):
        # both weights tied at the threshold: any alpha works, max is returned
        w = np.array([5.0, 5.0])
        alpha = exp3m_alpha(w, k=2, gamma=0.0)
        assert alpha == 5.0
        assert alpha_residual(w, alpha, 2, 0.0) < 1e-12

    def test_residual_on_random_inputs(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 200:
            m = int(rng.integers(3, 20))
            k = int(rng.integers(1, m))
            gamma = float(rng.uniform(0.001, 0.5))
            w = np.exp(rng.normal(0, 3, m))
            c = (1.0 / k - gamma / m) / (1.0 - gamma)
            if w.max() < c * w.sum():
                continue
            alpha = exp3m_alpha(w, k, gamma)
            assert alpha_residual(w, alpha, k, gamma) < 1e-12
            checked += 1

    def test_precondition_violation_raises(self):
        w = np.ones(10)
        with pytest.raises(ValueError, match="capping"):
            exp3m_alpha(w, k=2, gamma=0.01)


class TestProbabilities:
    def test_equal_weights_give_uniform(self):
        state = Exp3mState.fresh(6, 0.3)
        p, alpha, capped = exp3m_probabilities(state, k=2)
        assert p == pytest.approx(np.full(6, 2 / 6), abs=1e-12)
        assert math.isnan(alpha) and not capped.any()

    def test_capped_arms_get_probability_one_exactly(self):
        state = Exp3mState(np.array([50.0, 2.0, 1.0, 1.0]), 0.01)
        p, alpha, capped = exp3m_probabilities(state, k=2)
        assert capped[0]
        assert p[0] == 1.0

    def test_sum_and_bounds_on_random_states(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            m = int(rng.integers(2, 25))
            k = int(rng.integers(1, m + 1))
            gamma = float(rng.uniform(0.001, 1.0))
            state = Exp3mState(np.exp(rng.normal(0, 4, m)), gamma)
            p, alpha, capped = exp3m_probabilities(state, k)
            assert p.sum() == pytest.approx(k, abs=1e-9)
            assert np.all(p >= k * gamma / m - 1e-12)
            assert np.all(p <= 1.0)
            assert np.all(p[capped] == 1.0)


class TestUpdate:
    def test_zero_reward_leaves_weights_unchanged(self):
        state = Exp3mState(np.array([2.0, 3.0, 4.0]), 0.1)
        action, p, capped = exp3m_round(state, 2, np.random.default_rng(0))
        before = state.weights.copy()
        exp3m_update(state, action, p, capped, np.zeros(len(action)))
        assert np.array_equal(state.weights, before)

    def test_capped_arm_unchanged_regardless_of_reward(self):
        state = Exp3mState(np.array([50.0, 2.0, 1.0, 1.0]), 0.01)
        p, alpha, capped = exp3m_probabilities(state, k=2)
        assert capped[0]
        before = state.weights[0]
        exp3m_update(state, Action((1, 2)), p, capped, np.array([1.0, 1.0]))
        assert state.weights[0] == before
        assert state.weights[1] > 2.0

    def test_played_uncapped_multiplier(self):
        # x=1, p=0.5, k=2, m=4, gamma=0.01 -> weight multiplied by exp(0.01)
        state = Exp3mState(np.ones(4), 0.01)
        p = np.array([0.5, 0.5, 0.5, 0.5])
        capped = np.zeros(4, dtype=bool)
        exp3m_update(state, Action((1,)), p, capped, np.array([1.0]))
        assert state.weights[0] == pytest.approx(math.exp(0.01), rel=1e-14)
        assert np.all(state.weights[1:] == 1.0)

    def test_overflow_guard_preserves_probabilities(self):
        state = Exp3mState(np.array([1e299, 5e298, 1e297]), 0.05)
        p_before, _, _ = exp3m_probabilities(state, k=2)
        # push the largest weight over the guard threshold
        capped = np.zeros(3, dtype=bool)
        p = np.array([0.9, 0.6, 0.5])
        for _ in range(40):
            exp3m_update(state, Action((1,)), p, capped, np.array([1.0]))
        assert state.weights.max() <= 1e300
        assert np.all(np.isfinite(state.weights))
        p_after, _, _ = exp3m_probabilities(state, k=2)
        assert np.all(p_after <= 1.0) and p_after.sum() == pytest.approx(2, abs=1e-9)

    def test_state_rejects_bad_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            Exp3mState.fresh(3, 0.0)


class TestPolicyClass:
    def test_round_trip_selects_k_arms(self):
        rng = np.random.default_rng(2)
        policy = Exp3mPolicy(8, 3, 0.01, rng)
        for t in range(1, 200):
            idx = policy.select(t)
            assert idx.shape == (3,)
            assert len(set(idx.tolist())) == 3
            policy.update(idx, rng.integers(0, 2, 3).astype(float))
        assert np.all(policy.state.weights > 0)

    def test_weights_concentrate_on_good_arms(self):
        rng = np.random.default_rng(12)
        means = np.array([0.9, 0.85, 0.1, 0.05, 0.02])
        policy = Exp3mPolicy(5, 2, 0.05, rng)
        for t in range(1, 3000):
            idx = policy.select(t)
            outs = (rng.random(2) < means[idx]).astype(float)
            policy.update(idx, outs)
        w = policy.state.weights
        assert w[0] + w[1] > 10 * (w[2] + w[3] + w[4])
