import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abstention.core import (
    Decision,
    DomainError,
    ForecasterState,
    exact_run,
    max_mixable_eta,
    mix_loss_from_r,
    step,
    tuned_eta,
)
from abstention.environments import iid_env, iid_multiclass_env
from abstention.multiclass import (
    ABSTAIN,
    case_bound,
    class_distribution,
    multiclass_exact_run,
    multiclass_policy,
    multiclass_regret_bound,
    multiclass_step,
)
from abstention.seeding import stream

# -(1/eta) log(1 + r (e^-eta - 1)) at 50 digits (mpmath).
MIX_R05_ETA01 = 0.48750520486374414587
MIX_R06_ETA01 = 0.58792447275813946639

seeds = st.integers(0, 2**32 - 1)


class TestDistributionAndPolicy:
    def test_unanimous_class(self):
        np.testing.assert_array_equal(class_distribution([0.5, 0.5], [3, 3], 4), [0, 0, 1, 0])

    def test_additivity(self):
        np.testing.assert_allclose(class_distribution([0.2, 0.3, 0.5], [1, 2, 1], 3), [0.7, 0.3, 0.0])

    def test_label_out_of_range(self):
        with pytest.raises(DomainError):
            class_distribution([0.5, 0.5], [1, 4], 3)
        with pytest.raises(DomainError):
            class_distribution([1.0], [1], 1)

    def test_policy_examples(self):
        pol = multiclass_policy([1 / 3, 1 / 3, 1 / 3])
        assert pol.p_star == pytest.approx(1 / 3) and pol.alpha == 1.0
        pol = multiclass_policy([0.9, 0.1])
        assert pol.k_star == 1 and pol.alpha == pytest.approx(0.2)
        pol = multiclass_policy([0.5, 0.5])
        assert pol.k_star == 1 and pol.alpha == 1.0

    @given(seeds, st.integers(2, 8))
    def test_policy_invariants(self, seed, k):
        dist = stream(seed).dirichlet(np.ones(k))
        pol = multiclass_policy(dist)
        assert pol.p_star == dist.max() and dist[pol.k_star - 1] == pol.p_star
        assert pol.alpha == min(2 * (1 - pol.p_star), 1.0)
        if pol.p_star <= 0.5:
            assert pol.alpha == 1.0


class TestStep:
    def test_sure_abstention(self):
        state = ForecasterState.initial(3, 0.5)
        for seed in range(200):
            decision, stats, _ = multiclass_step(state, [1, 2, 3], 2, 0.3, stream(seed), 3)
            assert decision == ABSTAIN
            assert stats.expected_loss == 0.3

    def test_expected_loss_formula(self):
        state = ForecasterState(np.array([0, 0, 3]), 1.0, 3)
        post = np.exp(-np.array([0, 0, 3.0]))
        post /= post.sum()
        p_star = post[0] + post[1]
        _, stats, nxt = multiclass_step(state, [2, 2, 1], 1, 0.2, stream(0), 3)
        alpha = 2 * (1 - p_star)
        assert stats.expected_loss == pytest.approx(alpha * 0.2 + (1 - alpha))
        assert stats.r == pytest.approx(p_star)
        np.testing.assert_array_equal(nxt.cum_losses, [1, 1, 3])

    def test_minority_mass_lower_bounds_the_mix_loss(self):
        # p* = 0.4 forces abstention, and r >= 1 - p* = 0.6 >= 1/2.
        state = ForecasterState.initial(5, 0.1)
        _, stats, _ = multiclass_step(state, [1, 1, 2, 2, 3], 3, 0.45, stream(1), 3)
        assert stats.expected_loss == 0.45
        assert stats.r == pytest.approx(0.8)
        assert stats.mix_loss >= 0.45
        assert mix_loss_from_r(0.5, 0.1) == pytest.approx(MIX_R05_ETA01, abs=1e-15)
        assert mix_loss_from_r(0.6, 0.1) == pytest.approx(MIX_R06_ETA01, abs=1e-15)

    def test_bad_outcome(self):
        with pytest.raises(DomainError):
            multiclass_step(ForecasterState.initial(2, 1.0), [1, 2], 0, 0.2, stream(0), 2)
        with pytest.raises(DomainError):
            multiclass_step(ForecasterState.initial(2, 1.0), [1, 2], 1, 0.6, stream(0), 2)


class TestBinaryConsistency:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_two_classes_match_the_binary_forecaster(self, seed):
        rng = stream(seed)
        n, T, c = int(rng.integers(1, 9)), 60, float(rng.random() / 2)
        env = iid_env(n, T, rng.random(n), 0.5, seed, c)
        b_state = ForecasterState.initial(n, 0.7)
        m_state = ForecasterState.initial(n, 0.7)
        b_rng, m_rng = stream(seed, 1), stream(seed, 1)
        for advice, y, cost in env:
            bd, bs, b_state = step(b_state, advice, y, cost, b_rng)
            md, ms, m_state = multiclass_step(m_state, advice + 1, y + 1, cost, m_rng, 2)
            assert md == (ABSTAIN if bd == Decision.ABSTAIN else int(bd) + 1)
            assert ms.expected_loss == pytest.approx(bs.expected_loss, abs=1e-12)
            assert ms.mix_loss == pytest.approx(bs.mix_loss, abs=1e-12)
            assert ms.r == pytest.approx(bs.r, abs=1e-12)
            assert ms.realized_loss == bs.realized_loss
        np.testing.assert_array_equal(m_state.cum_losses, b_state.cum_losses)

    def test_exact_runs_agree(self):
        env = iid_env(6, 500, stream(4).random(6), 0.3, 4, 0.2)
        b = exact_run(env.advice, env.outcomes, env.costs, 1.2)
        m = multiclass_exact_run(env.advice + 1, env.outcomes + 1, 2, env.costs, 1.2)
        np.testing.assert_allclose(m.expected_loss, b.expected_loss, atol=1e-12, rtol=0)
        np.testing.assert_allclose(m.mix_loss, b.mix_loss, atol=1e-12, rtol=0)
        committed = b.alpha < 1
        np.testing.assert_array_equal(m.k_star[committed], b.k_star[committed] + 1)


class TestGuarantees:
    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_case_bound_and_regret(self, seed):
        rng = stream(seed)
        k, n = int(rng.integers(2, 7)), int(rng.integers(2, 33))
        c = float(rng.choice([0.1, 0.2, 0.3, 0.4, 0.45]))
        T = 500
        env = iid_multiclass_env(n, T, k, rng.random(n), seed, c)
        tr = multiclass_exact_run(env.advice, env.outcomes, k, c, tuned_eta(n, T, c))
        assert np.all(tr.expected_loss <= case_bound(tr.r, c) + 1e-12)
        assert tr.regret <= multiclass_regret_bound(n, T, c) + 1e-9

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_dominance_below_the_largest_mixable_rate(self, seed):
        rng = stream(seed)
        k, n = int(rng.integers(2, 7)), int(rng.integers(2, 33))
        c = float(rng.choice([0.1, 0.2, 0.3, 0.4, 0.45]))
        env = iid_multiclass_env(n, 300, k, rng.random(n), seed, c)
        tr = multiclass_exact_run(env.advice, env.outcomes, k, c, max_mixable_eta(c))
        assert np.all(tr.expected_loss <= tr.mix_loss + 1e-12)

    def test_dominance_fails_at_twice_one_minus_two_c(self):
        # Three classes, c = 0.1, eta = 1.6: p* = r = 0.95 on a wrong majority.
        c, eta = 0.1, 2 * (1 - 2 * 0.1)
        r = 0.95
        expected = 2 * (1 - r) * c + (2 * r - 1)
        assert expected > mix_loss_from_r(r, eta) + 0.01

    def test_one_perfect_expert(self):
        T, n, k, c = 400, 8, 4, 0.3
        env = iid_multiclass_env(n, T, k, np.r_[0.0, np.full(n - 1, 0.6)], 3, c)
        eta = 2 * (1 - 2 * c)
        tr = multiclass_exact_run(env.advice, env.outcomes, k, c, eta)
        assert tr.expert_totals.min() == 0
        assert tr.regret <= math.log(n) / eta + 1e-9
