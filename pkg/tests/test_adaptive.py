import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abstention.adaptive import (
    AdaptiveState,
    TsybakovParams,
    adaptive_exact_run,
    adaptive_regret_bound,
    adaptive_step,
    breakpoints,
    eta_schedule,
    fixed_rate_bound,
    hard_rounds,
    nonstrict_bound,
    optimal_bound,
    tsybakov_eta,
)
from abstention.checks import grid_optimal_bound
from abstention.core import DomainError, exact_run
from abstention.environments import hand_built_schedules, random_loss_matrix, replay_env
from abstention.seeding import stream

# Reference values evaluated at 50 digits with mpmath.
TSY_ETA_16_1E4_05 = 0.065207139762871104132
ADAPTIVE_C025_N2 = 2.3403442274970196506  # 15/8 ln 2 + 5/4 sqrt(ln 2)
ADAPTIVE_HALF_N2_T800 = 32.261491182360788059
THREE_COST_BOUND = 1.5112943611198906188  # ln 2 / 0.5 + 0.5 * 2 / 8

seeds = st.integers(0, 2**32 - 1)


def reference_schedule(costs, n):
    """Straight-line re-statement of the rate update, one round at a time."""
    eta, d, out = 1.0, 1, []
    for c in costs:
        out.append((eta, d))
        if eta >= 2 * (1 - 2 * c):
            d += 1
        eta = min(math.sqrt(math.log(n) / d), 1.0)
    return out, eta, d


class TestSchedule:
    def test_zero_costs_never_increment(self):
        etas, d, inc = eta_schedule(np.zeros(100), 16)
        assert not inc.any()
        assert np.all(d == 1) and np.all(etas == 1.0)

    def test_two_experts_start_at_one_then_follow_the_formula(self):
        etas, _, _ = eta_schedule(np.zeros(5), 2)
        assert etas[0] == 1.0
        np.testing.assert_allclose(etas[1:], math.sqrt(math.log(2)))

    def test_half_costs_increment_every_round(self):
        T, n = 50, 16
        etas, d, inc = eta_schedule(np.full(T, 0.5), n)
        assert inc.all() and d[-1] == T + 1
        _, final_eta, _ = reference_schedule(np.full(T, 0.5), n)
        assert final_eta == pytest.approx(math.sqrt(math.log(n) / (T + 1)))

    def test_mixed_schedule_matches_reference(self):
        costs = np.r_[np.full(10, 0.5), np.full(990, 0.1)]
        etas, d, _ = eta_schedule(costs, 2)
        ref, _, final_d = reference_schedule(costs, 2)
        np.testing.assert_array_equal(etas, [e for e, _ in ref])
        assert d[-1] == final_d

    @given(seeds, st.integers(2, 64))
    @settings(max_examples=30)
    def test_schedule_invariants(self, seed, n):
        costs = stream(seed).random(300) / 2
        etas, d, inc = eta_schedule(costs, n)
        assert np.all(np.diff(etas) <= 0) and np.all((etas > 0) & (etas <= 1))
        assert np.all(np.diff(d) >= 0) and d[-1] - 1 == inc.sum()
        ref, _, _ = reference_schedule(costs, n)
        np.testing.assert_array_equal(etas, [e for e, _ in ref])
        # Chained inequality on the increment rounds.
        assert (etas * inc).sum() / 8 <= 0.25 * math.sqrt(d[-1] * math.log(n)) + 1e-12

    def test_step_matches_exact_run(self):
        rng = stream(11)
        costs = hand_built_schedules(300, 4)["alternating"]
        env = replay_env(random_loss_matrix(300, 4, rng), costs)
        tr = adaptive_exact_run(env.advice, env.outcomes, env.costs)
        state = AdaptiveState.initial(4)
        for t, (advice, y, c) in enumerate(env):
            assert state.eta == tr.eta[t]
            _, stats, state = adaptive_step(state, advice, y, c, rng)
            assert state.d == tr.d[t]
            assert stats.expected_loss == pytest.approx(tr.expected_loss[t], abs=1e-12)


class TestCounts:
    def test_examples(self):
        assert hard_rounds(0.4, np.full(7, 0.25)) == 0
        assert hard_rounds(1.0, np.full(7, 0.25)) == 7
        assert hard_rounds(1.0, np.full(7, 0.25), strict=True) == 0
        assert hard_rounds(0.5, [0.5, 0.4, 0.1]) == 2

    def test_three_cost_bounds(self):
        costs = [0.5, 0.4, 0.1]
        assert nonstrict_bound(0.5, costs, 2) == pytest.approx(THREE_COST_BOUND, abs=1e-15)
        assert fixed_rate_bound(0.5, costs, 2) == pytest.approx(THREE_COST_BOUND, abs=1e-15)

    def test_bound_regimes(self):
        costs = stream(1).random(40) / 2
        low = breakpoints(costs).min()
        assert fixed_rate_bound(low, costs, 8) == pytest.approx(math.log(8) / low)
        assert fixed_rate_bound(3.0, costs, 8) == pytest.approx(math.log(8) / 3 + 3 * 40 / 8)
        assert nonstrict_bound(math.log(4), np.zeros(5), 4) == pytest.approx(1.0)  # ln 4 < 2: nothing counted


class TestOptimalBound:
    @pytest.mark.parametrize("c", [0.1, 0.25, 0.4])
    def test_constant_cost(self, c):
        n, T = 4, 10_000
        opt = optimal_bound(np.full(T, c), n)
        assert opt.eta_star == pytest.approx(2 * (1 - 2 * c))
        assert opt.r_star == pytest.approx(math.log(n) / (2 * (1 - 2 * c)))

    def test_all_half(self):
        n, T = 8, 5000
        opt = optimal_bound(np.full(T, 0.5), n)
        assert opt.r_star == pytest.approx(math.sqrt(T * math.log(n) / 2))
        assert opt.eta_star == pytest.approx(math.sqrt(8 * math.log(n) / T))

    def test_random_schedules_against_grid_oracle(self):
        for i in range(100):
            rng = stream(7, i)
            T = int(rng.integers(1, 1001))
            costs = rng.random(T) / 2
            if i % 4 == 0:
                costs = rng.choice([0.0, 0.1, 0.25, 0.5], size=T)  # heavy ties
            n = int(rng.integers(2, 65))
            opt = optimal_bound(costs, n)
            _, oracle = grid_optimal_bound(costs, n)
            assert abs(opt.r_star - oracle) <= 1e-9 * oracle, i
            assert opt.r_star == pytest.approx(fixed_rate_bound(opt.eta_star, costs, n), rel=1e-12)
            assert opt.r_star >= math.log(n) / opt.eta_star - 1e-12
            assert opt.r_star <= 2 * math.log(n) / opt.eta_star + 1e-12
            assert opt.b_at_eta_star >= opt.r_star

    def test_needs_two_experts(self):
        with pytest.raises(DomainError):
            optimal_bound([0.1], 1)

    def test_minimum_on_a_threshold_is_below_twice_the_first_term(self):
        # A minimizer sitting on a threshold only guarantees r_star >= ln n / eta_star.
        opt = optimal_bound(np.full(1000, 0.25), 2)
        assert opt.eta_star == 1.0
        assert opt.r_star == pytest.approx(math.log(2))
        assert opt.r_star < 2 * math.log(2) / opt.eta_star


class TestGuarantees:
    def test_reference_values(self):
        assert adaptive_regret_bound(np.full(10**5, 0.25), 2) == pytest.approx(ADAPTIVE_C025_N2, abs=1e-12)
        assert adaptive_regret_bound(np.full(800, 0.5), 2) == pytest.approx(ADAPTIVE_HALF_N2_T800, abs=1e-12)
        assert tsybakov_eta(16, 10**4, 0.5) == pytest.approx(TSY_ETA_16_1E4_05, abs=1e-15)
        assert tsybakov_eta(16, 10**4, 0.0) == pytest.approx(math.sqrt(math.log(16) / 10**4))
        assert tsybakov_eta(16, 10**4, 0.999999) == pytest.approx(1.0, abs=1e-4)

    def test_tsybakov_params(self):
        assert TsybakovParams(0.5, 1.0).exponent == 1.0
        with pytest.raises(DomainError):
            TsybakovParams(1.0, 1.0)
        with pytest.raises(DomainError):
            TsybakovParams(0.5, 0.0)

    @given(seeds, st.floats(0.01, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_fixed_rate_bound_on_random_instances(self, seed, eta):
        rng = stream(seed)
        n = int(rng.integers(2, 17))
        env = replay_env(random_loss_matrix(300, n, rng), rng.random(300) / 2)
        tr = exact_run(env.advice, env.outcomes, env.costs, eta)
        assert tr.regret <= fixed_rate_bound(eta, env.costs, n) + 1e-9

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_adaptive_bound_and_hoeffding_gap(self, seed):
        rng = stream(seed)
        n = int(rng.integers(2, 33))
        env = replay_env(random_loss_matrix(400, n, rng), rng.random(400) / 2)
        tr = adaptive_exact_run(env.advice, env.outcomes, env.costs)
        assert tr.regret <= adaptive_regret_bound(env.costs, n) + 1e-9
        assert np.all(tr.expected_loss - tr.mix_loss <= tr.eta / 8 + 1e-12)

    @pytest.mark.parametrize("name", sorted(hand_built_schedules(10, 2)))
    def test_hand_built_schedules(self, name):
        T, n = 3000, 16
        costs = hand_built_schedules(T, n)[name]
        env = replay_env(random_loss_matrix(T, n, stream(2, len(name))), costs)
        tr = adaptive_exact_run(env.advice, env.outcomes, env.costs)
        assert tr.regret <= adaptive_regret_bound(costs, n) + 1e-9

    def test_gap_is_not_zero_on_rounds_below_the_threshold(self):
        # eta_1 = 1 <= 2(1 - 2c) for c just under 1/4, yet with 15 of 16 experts
        # wrong the expected loss exceeds the mix loss: 1 is above the largest
        # mixable rate for that cost.
        c = float(np.nextafter(0.25, 0.0))
        env = replay_env(np.array([[0] + [1] * 15]), c)
        tr = adaptive_exact_run(env.advice, env.outcomes, env.costs)
        assert tr.eta[0] <= breakpoints([c])[0]
        assert tr.expected_loss[0] - tr.mix_loss[0] > 5e-3
