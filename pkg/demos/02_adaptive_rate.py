# %% [markdown]
# # Costs that change every round
#
# With a cost schedule c_1, ..., c_T the best fixed rate trades ln N / eta
# against eta/8 per round whose threshold 2(1 - 2c_t) lies below eta.  The
# adaptive forecaster starts at eta = 1, counts the rounds that were hard for
# its current rate, and sets eta = min(sqrt(ln N / d), 1).  It never sees the
# schedule in advance, yet stays within a constant factor of the best fixed
# rate in hindsight.

# %%
import math

import numpy as np

from abstention import TsybakovParams, adaptive_exact_run, adaptive_regret_bound, optimal_bound, tsybakov_costs
from abstention.environments import hand_built_schedules, random_loss_matrix, replay_env
from abstention.seeding import stream

T, n = 20_000, 16
losses = random_loss_matrix(T, n, stream(3))
schedules = {f"margin condition alpha={a}": tsybakov_costs(T, TsybakovParams(a, 1.0), seed=4)
             for a in (0.3, 0.5, 0.8)}
schedules.update({k: v for k, v in hand_built_schedules(T, n).items() if k in ("all-half", "alternating", "rate-ladder")})
for name, costs in schedules.items():
    env = replay_env(losses, costs)
    tr = adaptive_exact_run(env.advice, env.outcomes, env.costs)
    opt = optimal_bound(costs, n)
    print(f"{name:<28} regret {tr.regret:8.2f}  best fixed-rate bound {opt.r_star:8.2f} (eta* {opt.eta_star:.3f})"
          f"  adaptive bound {adaptive_regret_bound(costs, n):8.2f}  final d {tr.d[-1]}")

# %% [markdown]
# ## Growth in T
#
# Under the margin condition with exponent alpha the regret of the matched
# fixed rate grows no faster than T^((1 - alpha)/(2 - alpha)).  A sweep over T
# fits the log-log slope.

# %%
from abstention import make_config, sweep

for alpha in (0.0, 0.5, 0.8):
    base = make_config(mode="binary-changing-c", n=16, costs="tsybakov", eta_policy="tsybakov",
                       alpha=alpha, rates="0,0.5")
    res = sweep(base, "T", [1_000, 3_000, 10_000, 30_000, 100_000], repeats=3)
    print(f"alpha={alpha}: fitted slope {res.slope:.3f}, rate exponent {(1 - alpha) / (2 - alpha):.3f}")
