import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abstention.core import (
    Decision,
    DomainError,
    ForecasterState,
    ShapeError,
    aggregate,
    binary_losses,
    decision_policy,
    exact_run,
    expected_abstain_loss,
    max_mixable_eta,
    misclass_prob,
    mix_loss,
    mix_loss_from_r,
    posterior,
    sample_decision,
    softmax_posterior,
    step,
    tuned_eta,
    tuned_regret_bound,
)
from abstention.environments import alternating_env, random_loss_matrix, replay_env
from abstention.seeding import stream

# Reference values evaluated at 50 digits with mpmath.
SOFTMAX_0_1 = 0.73105857863000487925
MIX_HALF_ETA1 = 0.37988549304172247537
F_HALF_ETA04 = 0.45032982039998171437
TUNED_16_1000_049 = 0.14893189644236136531
MAX_MIXABLE = {0.0: 1.2564312086261696770, 0.1: 1.0794058855540268891, 0.25: 0.76268856085033898204,
               0.4: 0.35419926228913459532, 0.45: 0.18768572651182065206}
WORST_GAP_C0 = (0.90651764274966565182, 0.047181376004956465733)  # (r, g - f) at c = 0, eta = 2


costs = st.floats(0.0, 0.5)
probs = st.floats(0.0, 1.0)
rates = st.floats(1e-3, 20.0)


class TestPosterior:
    def test_uniform_start(self):
        np.testing.assert_array_equal(posterior(ForecasterState.initial(2, 1.0)), [0.5, 0.5])

    def test_reference_value(self):
        q = softmax_posterior([0, 1], 1.0)
        assert q[0] == pytest.approx(SOFTMAX_0_1, abs=1e-15)
        assert q[1] == pytest.approx(1 - SOFTMAX_0_1, abs=1e-15)

    def test_dominated_expert_vanishes_without_underflow(self):
        q = softmax_posterior([0, 10**9], 5.0)
        np.testing.assert_array_equal(q, [1.0, 0.0])
        q = softmax_posterior([10**9, 10**9], 5.0)
        np.testing.assert_array_equal(q, [0.5, 0.5])

    @given(st.lists(st.integers(0, 10**6), min_size=1, max_size=40), rates)
    def test_is_a_distribution(self, cum, eta):
        q = softmax_posterior(cum, eta)
        assert np.all(q >= 0)
        assert abs(q.sum() - 1) <= 1e-12

    def test_per_row_rates(self):
        cum = np.array([[0, 1], [0, 1]])
        q = softmax_posterior(cum, np.array([1.0, 2.0]))
        np.testing.assert_allclose(q[1], softmax_posterior([0, 1], 2.0))

    def test_state_validation(self):
        with pytest.raises(DomainError):
            ForecasterState(np.array([0, 2]), 1.0, round=1)
        with pytest.raises(DomainError):
            ForecasterState.initial(2, 0.0)
        with pytest.raises(ShapeError):
            ForecasterState(np.array([], dtype=np.int64), 1.0)


class TestAggregateAndPolicy:
    def test_examples(self):
        assert aggregate([0.5, 0.5], [0, 1]) == 0.5
        assert aggregate([1.0, 0.0], [1, 0]) == 1.0
        assert aggregate([SOFTMAX_0_1, 1 - SOFTMAX_0_1], [1, 0]) == pytest.approx(SOFTMAX_0_1)

    @pytest.mark.parametrize("p, expected", [
        (0.5, (0.5, 1, 1.0)), (1.0, (1.0, 1, 0.0)), (0.75, (0.75, 1, 0.5)), (0.0, (1.0, 0, 0.0)),
    ])
    def test_policy_examples(self, p, expected):
        pol = decision_policy(p)
        assert (pol.p_star, pol.k_star, pol.alpha) == expected

    @given(probs)
    def test_policy_invariants(self, p):
        pol = decision_policy(p)
        assert pol.p_star == max(p, 1 - p)
        assert 0.0 <= pol.alpha <= 1.0
        assert pol.k_star == int(p >= 0.5)

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            decision_policy(1.5)
        with pytest.raises(ShapeError):
            aggregate([0.5, 0.5], [1, 0, 1])
        with pytest.raises(DomainError):
            binary_losses([0, 2], 1)


class TestSampling:
    def test_extremes(self):
        rng = stream(0)
        assert all(sample_decision(decision_policy(1.0), rng) is Decision.ONE for _ in range(100))
        assert all(sample_decision(decision_policy(0.5), rng) is Decision.ABSTAIN for _ in range(100))

    def test_abstain_fraction(self):
        # alpha = 0.5; 3e-3 is more than 6 standard deviations of a mean of 1e6 fair coins.
        rng = stream(0, 99)
        pol = decision_policy(0.75)
        draws = np.array([sample_decision(pol, rng) is Decision.ABSTAIN for _ in range(10**6)])
        assert abs(draws.mean() - 0.5) <= 3e-3


class TestLosses:
    @pytest.mark.parametrize("advice, y, expected", [
        ([0, 1], 1, [1, 0]), ([1, 1], 1, [0, 0]), ([0, 0, 1], 0, [0, 0, 1]),
    ])
    def test_binary_losses(self, advice, y, expected):
        np.testing.assert_array_equal(binary_losses(advice, y), expected)

    def test_misclass_prob(self):
        assert misclass_prob([0.5, 0.5], [0, 1], 1) == 0.5
        assert misclass_prob([1.0, 0.0], [0, 1], 1) == 1.0
        assert misclass_prob([0.2, 0.3, 0.5], [1, 0, 1], 1) == pytest.approx(0.3)

    def test_mix_loss_examples(self):
        assert mix_loss([0.3, 0.7], [1, 1], 2.0) == pytest.approx(1.0, abs=1e-15)
        assert mix_loss([1.0, 0.0], [0, 1], 3.0) == 0.0
        assert mix_loss([0.5, 0.5], [0, 1], 1.0) == pytest.approx(MIX_HALF_ETA1, abs=1e-15)

    @given(probs, rates)
    def test_mix_loss_matches_r_form(self, r, eta):
        assert mix_loss([1 - r, r], [0, 1], eta) == pytest.approx(mix_loss_from_r(r, eta), abs=1e-12)

    def test_expected_loss_examples(self):
        assert expected_abstain_loss(0.0, 0.3) == 0.0
        assert expected_abstain_loss(0.5, 0.4) == pytest.approx(0.4)
        assert expected_abstain_loss(1.0, 0.25) == 1.0

    @given(probs, costs)
    def test_expected_loss_below_r_and_matches_policy(self, r, c):
        g = expected_abstain_loss(r, c)
        assert g <= r + 1e-15
        # Two experts disagreeing, mass r on the wrong one: alpha c + (1 - alpha) * [k* wrong].
        pol = decision_policy(1 - r)  # label 1 is correct, p = 1 - r
        direct = pol.alpha * c + (1 - pol.alpha) * (pol.k_star != 1)
        assert g == pytest.approx(direct, abs=1e-12)

    @given(rates)
    def test_endpoints(self, eta):
        assert mix_loss_from_r(0.0, eta) == 0.0
        assert mix_loss_from_r(1.0, eta) == pytest.approx(1.0, abs=1e-12)


class TestDominance:
    """The expected abstention loss against the mix loss, as a function of r."""

    @pytest.mark.parametrize("c", sorted(MAX_MIXABLE))
    def test_max_mixable_eta_reference(self, c):
        assert max_mixable_eta(c) == pytest.approx(MAX_MIXABLE[c], rel=1e-13)
        assert max_mixable_eta(c) < 2 * (1 - 2 * c)

    @given(costs.filter(lambda c: c < 0.5), st.floats(0.0, 1.0))
    @settings(max_examples=300)
    def test_dominance_holds_up_to_max_mixable_rate(self, c, shrink):
        eta = max_mixable_eta(c) * (1 - shrink * 0.999)
        r = np.linspace(0, 1, 2001)
        assert np.max(expected_abstain_loss(r, c) - mix_loss_from_r(r, eta)) <= 1e-12

    @given(costs.filter(lambda c: c < 0.5))
    def test_dominance_holds_at_half_the_claimed_rate(self, c):
        r = np.linspace(0, 1, 2001)
        assert np.max(expected_abstain_loss(r, c) - mix_loss_from_r(r, 1 - 2 * c)) <= 1e-12

    @pytest.mark.parametrize("c", [0.0, 0.1, 0.25, 0.4, 0.45])
    def test_dominance_fails_at_twice_one_minus_two_c(self, c):
        # Counterexample: just above the maximal rate the slope of the mix loss at r = 1 is too steep.
        r = np.linspace(0, 1, 10_001)
        eta = 2 * (1 - 2 * c)
        assert np.max(expected_abstain_loss(r, c) - mix_loss_from_r(r, eta)) > 1e-5

    def test_worst_violation_reference(self):
        r, gap = WORST_GAP_C0
        assert expected_abstain_loss(r, 0.0) - mix_loss_from_r(r, 2.0) == pytest.approx(gap, abs=1e-14)

    def test_single_round_example(self):
        state = ForecasterState.initial(2, 0.4)
        _, stats, _ = step(state, [0, 1], 1, 0.4, stream(0))
        assert stats.expected_loss == pytest.approx(0.4)
        assert stats.mix_loss == pytest.approx(F_HALF_ETA04, abs=1e-14)
        assert stats.mix_loss >= stats.expected_loss


class TestTuning:
    def test_examples(self):
        assert tuned_eta(2, 8 * math.log(2), 0.5) == pytest.approx(1.0)
        assert tuned_eta(2, 10**6, 0.25) == 1.0  # 2(1 - 2c) dominates
        assert tuned_eta(16, 1000, 0.49) == pytest.approx(TUNED_16_1000_049, abs=1e-15)

    def test_bound_branches(self):
        assert tuned_regret_bound(4, 10**4, 0.25) == pytest.approx(math.log(4))
        assert tuned_regret_bound(4, 100, 0.5) == pytest.approx(math.sqrt(100 * math.log(4) / 2))
        assert tuned_regret_bound(1, 100, 0.3) == 0.0

    def test_cost_validation(self):
        with pytest.raises(DomainError):
            tuned_eta(2, 10, 0.6)


class TestRuns:
    def test_single_always_correct_expert(self):
        env = replay_env(np.zeros((50, 1), dtype=int))
        tr = exact_run(env.advice, env.outcomes, 0.3, 1.0)
        assert tr.learner_loss == 0.0 and tr.regret == 0.0

    def test_alternating_constant_experts(self):
        env = alternating_env(100, 0.4)
        tr = exact_run(env.advice, env.outcomes, env.costs, 0.4)
        assert tr.regret <= math.log(2) / 0.4

    def test_step_matches_exact_run(self):
        rng = stream(3)
        losses = random_loss_matrix(200, 5, rng)
        env = replay_env(losses, rng.random(200) / 2)
        tr = exact_run(env.advice, env.outcomes, env.costs, 0.7)
        state = ForecasterState.initial(5, 0.7)
        cum = np.zeros(5, dtype=np.int64)
        for t, (advice, y, c) in enumerate(env):
            _, stats, state = step(state, advice, y, c, rng)
            cum += stats.losses
            np.testing.assert_array_equal(state.cum_losses, cum)
            assert stats.expected_loss == pytest.approx(tr.expected_loss[t], abs=1e-12)
            assert stats.mix_loss == pytest.approx(tr.mix_loss[t], abs=1e-12)
        np.testing.assert_array_equal(state.cum_losses, tr.expert_totals)

    def test_next_state_ignores_the_decision(self):
        state = ForecasterState.initial(3, 1.0)
        states = {step(state, [0, 1, 1], 1, 0.2, stream(s))[2].cum_losses.tobytes() for s in range(20)}
        assert len(states) == 1

    def test_sampled_mean_converges_to_expected_loss(self):
        env = replay_env(random_loss_matrix(500, 4, stream(5)), 0.2)
        tr = exact_run(env.advice, env.outcomes, env.costs, 1.0)
        M = 400
        wrong = (tr.k_star != tr.outcomes).astype(float)
        totals = [np.where(stream(5, 1, m).random(tr.T) < tr.alpha, tr.cost, wrong).sum() for m in range(M)]
        assert abs(np.mean(totals) - tr.learner_loss) <= 4 * math.sqrt(tr.T / M)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.1, 0.25, 0.4, 0.45]))
    @settings(max_examples=25, deadline=None)
    def test_regret_bound_at_a_provably_mixable_rate(self, seed, c):
        rng = stream(seed)
        n = int(rng.integers(1, 17))
        env = replay_env(random_loss_matrix(300, n, rng), c)
        eta = max_mixable_eta(c)
        tr = exact_run(env.advice, env.outcomes, env.costs, eta)
        assert np.all(tr.expected_loss <= tr.mix_loss + 1e-12)
        assert tr.regret <= math.log(n) / eta + 1e-9

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_hoeffding_gap_per_round(self, seed, eta):
        rng = stream(seed)
        env = replay_env(random_loss_matrix(200, 6, rng), rng.random(200) / 2)
        tr = exact_run(env.advice, env.outcomes, env.costs, eta)
        assert np.all(tr.r <= tr.mix_loss + eta / 8 + 1e-12)
        assert np.all(tr.expected_loss <= tr.r + 1e-15)
