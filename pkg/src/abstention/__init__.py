"""Online prediction with expert advice where the learner may abstain at a cost."""
from .adaptive import (
    AdaptiveState,
    OptimalBound,
    TsybakovParams,
    adaptive_exact_run,
    adaptive_regret_bound,
    adaptive_step,
    eta_schedule,
    fixed_rate_bound,
    optimal_bound,
    tsybakov_eta,
)
from .core import (
    Decision,
    DecisionPolicy,
    DomainError,
    ForecasterState,
    ShapeError,
    Trace,
    aggregate,
    decision_policy,
    exact_run,
    expected_abstain_loss,
    max_mixable_eta,
    mix_loss,
    mix_loss_from_r,
    posterior,
    step,
    tuned_eta,
    tuned_regret_bound,
)
from .environments import (
    ObliviousEnvironment,
    derandomized_learner,
    iid_env,
    opposite_label_adversary,
    replay_env,
    tsybakov_costs,
    verify_tsybakov,
)
from .harness import RunConfig, demo_lower_bound, make_config, read_config, run, sweep
from .littlestone import HypothesisClass, cover_run, expert_cover, ldim, soa_predict
from .multiclass import multiclass_exact_run, multiclass_policy, multiclass_step

__version__ = "0.1.0"
