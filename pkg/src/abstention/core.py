"""Exponentially weighted forecaster that may abstain at a fixed cost.

The learner keeps one integer cumulative loss per expert.  Each round the
posterior over experts is the softmax of ``-eta * cum_losses``, the mean
prediction ``p`` is the posterior mass on label 1, and the learner abstains
with probability ``2 * (1 - max(p, 1 - p))``, otherwise predicting the more
likely label.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ShapeError(ValueError):
    """Array arguments have incompatible lengths or dimensions."""


class Decision(enum.IntEnum):
    ABSTAIN = -1
    ZERO = 0
    ONE = 1


def as_advice(bits) -> np.ndarray:
    """Validate a vector of binary expert predictions."""
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"advice must be a non-empty 1-D sequence, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("advice entries must be 0 or 1")
    return arr.astype(np.int8)


def _check_label(y) -> int:
    if y not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {y!r}")
    return int(y)


def _check_cost(c: float) -> float:
    if not 0.0 <= c <= 0.5:
        raise DomainError(f"abstention cost must lie in [0, 1/2], got {c}")
    return float(c)


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")


@dataclass(frozen=True)
class ForecasterState:
    """Cumulative expert losses after ``round`` completed rounds."""

    cum_losses: np.ndarray
    eta: float
    round: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"learning rate must be positive, got {self.eta}")
        cum = np.asarray(self.cum_losses, dtype=np.int64)
        if cum.ndim != 1 or cum.size == 0:
            raise ShapeError("cum_losses must be a non-empty 1-D array")
        if np.any(cum < 0) or np.any(cum > self.round):
            raise DomainError("cumulative losses must lie in [0, round]")
        object.__setattr__(self, "cum_losses", cum)

    @classmethod
    def initial(cls, n: int, eta: float) -> "ForecasterState":
        return cls(np.zeros(n, dtype=np.int64), eta, 0)

    @property
    def n(self) -> int:
        return self.cum_losses.size

    def weights(self) -> np.ndarray:
        # May underflow for long runs; use posterior() for anything numerical.
        return np.exp(-self.eta * self.cum_losses)


def softmax_posterior(cum_losses, eta) -> np.ndarray:
    """Softmax of ``-eta * cum_losses`` along the last axis.

    ``eta`` may be a scalar or, for 2-D input, one rate per row.  Max
    subtraction keeps every weight in ``(0, 1]`` so nothing underflows to an
    all-zero row however large the losses get.
    """
    cum = np.asarray(cum_losses, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if cum.ndim == 2 and eta.ndim == 1:
        eta = eta[:, None]
    logits = -eta * cum
    logits = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def posterior(state: ForecasterState) -> np.ndarray:
    return softmax_posterior(state.cum_losses, state.eta)


@dataclass(frozen=True)
class DecisionPolicy:
    p: float
    p_star: float
    k_star: int
    alpha: float


def aggregate(post, advice) -> float:
    """Posterior-weighted mean prediction ``p_t``."""
    post = np.asarray(post, dtype=float)
    advice = np.asarray(advice)
    _check_same_length(post, advice)
    return float(np.clip(post @ advice, 0.0, 1.0))


def decision_policy(p: float) -> DecisionPolicy:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"mean prediction must lie in [0, 1], got {p}")
    p_star = max(p, 1.0 - p)
    return DecisionPolicy(p=p, p_star=p_star, k_star=int(p >= 0.5), alpha=2.0 * (1.0 - p_star))


def sample_decision(policy: DecisionPolicy, rng: np.random.Generator) -> Decision:
    """Abstain with probability ``policy.alpha``; consumes exactly one uniform."""
    if rng.random() < policy.alpha:
        return Decision.ABSTAIN
    return Decision(policy.k_star)


def binary_losses(advice, y) -> np.ndarray:
    y = _check_label(y)
    return (as_advice(advice) != y).astype(np.int8)


def misclass_prob(post, advice, y) -> float:
    """Posterior mass on experts that predicted the wrong label."""
    post = np.asarray(post, dtype=float)
    losses = binary_losses(advice, y)
    _check_same_length(post, losses)
    return float(np.clip(post @ losses, 0.0, 1.0))


def mix_loss(post, losses, eta: float) -> float:
    """``-(1/eta) * log(sum_i post_i * exp(-eta * losses_i))``."""
    if not eta > 0:
        raise DomainError(f"learning rate must be positive, got {eta}")
    post = np.asarray(post, dtype=float)
    losses = np.asarray(losses, dtype=float)
    _check_same_length(post, losses)
    # sum_i q_i e^{-eta l_i} = 1 + sum_i q_i expm1(-eta l_i); log1p keeps small
    # rates accurate, logsumexp takes over once the sum is far below 1.
    shift = float(post @ np.expm1(-eta * losses))
    if shift > -0.5:
        return -math.log1p(shift) / eta
    return float(-logsumexp(-eta * losses, b=post) / eta)


def mix_loss_from_r(r, eta):
    """Mix loss as a function of the misclassification probability."""
    if np.any(np.asarray(eta) <= 0):
        raise DomainError("learning rate must be positive")
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise DomainError("r must lie in [0, 1]")
    eta = np.asarray(eta, dtype=float)
    shift = r * np.expm1(-eta)
    # log(1 - r + r e^-eta): log1p is accurate while the argument stays near 1,
    # logaddexp once it gets small (large eta and r near 1).
    with np.errstate(divide="ignore"):
        far = np.logaddexp(np.log1p(-r), np.log(r) - eta)
    out = -np.where(shift > -0.5, np.log1p(shift), far) / eta
    return float(out) if out.ndim == 0 else out


def expected_abstain_loss(r, c):
    """Exact expected loss of the abstaining rule given misclassification prob ``r``."""
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise DomainError("r must lie in [0, 1]")
    if np.any((c < 0) | (c > 0.5)):
        raise DomainError("abstention cost must lie in [0, 1/2]")
    out = r - (1.0 - 2.0 * c) * np.minimum(r, 1.0 - r)
    return float(out) if out.ndim == 0 else out


def realized_loss(decision: Decision, y: int, c: float) -> float:
    if decision is Decision.ABSTAIN:
        return float(c)
    return float(int(decision) != y)


@dataclass(frozen=True)
class RoundStats:
    r: float
    mix_loss: float
    expected_loss: float
    realized_loss: float
    losses: np.ndarray
    cost: float
    eta: float


def step(state: ForecasterState, advice, y: int, c: float, rng: np.random.Generator):
    """Play one round; returns ``(decision, stats, next_state)``.

    The next state depends only on the experts' losses, never on the sampled
    decision.
    """
    advice = as_advice(advice)
    y = _check_label(y)
    c = _check_cost(c)
    _check_same_length(state.cum_losses, advice)
    post = posterior(state)
    policy = decision_policy(aggregate(post, advice))
    decision = sample_decision(policy, rng)
    losses = binary_losses(advice, y)
    r = float(np.clip(post @ losses, 0.0, 1.0))
    stats = RoundStats(
        r=r,
        mix_loss=mix_loss_from_r(r, state.eta),
        expected_loss=expected_abstain_loss(r, c),
        realized_loss=realized_loss(decision, y, c),
        losses=losses,
        cost=c,
        eta=state.eta,
    )
    nxt = ForecasterState(state.cum_losses + losses, state.eta, state.round + 1)
    return decision, stats, nxt


def tuned_eta(n: int, T: int, c: float) -> float:
    """Learning rate ``max(2(1-2c), sqrt(8 ln n / T))``."""
    if n < 1 or T < 1:
        raise DomainError("need n >= 1 and T >= 1")
    c = _check_cost(c)
    return max(2.0 * (1.0 - 2.0 * c), math.sqrt(8.0 * math.log(n) / T))


def tuned_regret_bound(n: int, T: int, c: float) -> float:
    """``min(ln n / (2(1-2c)), sqrt(T ln n / 2))``, infinite first term at c = 1/2."""
    c = _check_cost(c)
    log_n = math.log(n)
    fast = math.inf if c == 0.5 else log_n / (2.0 * (1.0 - 2.0 * c))
    return min(fast, math.sqrt(T * log_n / 2.0))


def max_mixable_eta(c: float) -> float:
    """Largest rate for which the expected loss never exceeds the mix loss.

    Solves ``(e^eta - 1)/eta = 2(1-c)`` and ``(1 - e^-eta)/eta = 2c`` and
    returns the smaller root.  This is strictly below ``2(1-2c)`` for every
    ``c < 1/2``; zero at ``c = 1/2``.
    """
    c = _check_cost(c)
    if c == 0.5:
        return 0.0

    def upper(eta):
        return math.expm1(eta) / eta - 2.0 * (1.0 - c)

    hi = 1.0
    while upper(hi) < 0:
        hi *= 2.0
    root = brentq(upper, 1e-300, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if c > 0:

        def lower(eta):
            return -math.expm1(-eta) / eta - 2.0 * c

        if lower(root) < 0:
            root = brentq(lower, 1e-300, root, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return root


@dataclass(frozen=True)
class Trace:
    """Per-round quantities of one run, all arrays of length T."""

    p: np.ndarray
    k_star: np.ndarray
    alpha: np.ndarray
    r: np.ndarray
    mix_loss: np.ndarray
    expected_loss: np.ndarray
    eta: np.ndarray
    cost: np.ndarray
    outcomes: np.ndarray
    expert_totals: np.ndarray
    d: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.p.size

    @property
    def learner_loss(self) -> float:
        return float(self.expected_loss.sum())

    @property
    def regret(self) -> float:
        return self.learner_loss - float(self.expert_totals.min())

    def sample_decisions(self, rng: np.random.Generator) -> np.ndarray:
        """One realized decision per round; -1 marks abstention."""
        u = rng.random(self.T)
        return np.where(u < self.alpha, int(Decision.ABSTAIN), self.k_star).astype(np.int8)


def broadcast_rounds(value, T: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(T, float(arr))
    if arr.shape != (T,):
        raise ShapeError(f"{name} must be a scalar or have length {T}, got shape {arr.shape}")
    return arr


def expert_losses(advice, outcomes) -> np.ndarray:
    advice = np.asarray(advice)
    outcomes = np.asarray(outcomes)
    if advice.ndim != 2 or outcomes.shape != (advice.shape[0],):
        raise ShapeError(f"advice {advice.shape} and outcomes {outcomes.shape} do not align")
    return (advice != outcomes[:, None]).astype(np.int64)


def exact_run(advice, outcomes, costs, eta) -> Trace:
    """Run the forecaster over a whole oblivious sequence at once.

    Expected losses are computed in closed form from each round's
    misclassification probability, so the regret is exact rather than
    sampled.  ``eta`` may vary per round; the posterior at round t always uses
    the rate of round t applied to losses of rounds before t.
    """
    advice = np.asarray(advice)
    outcomes = np.asarray(outcomes)
    losses = expert_losses(advice, outcomes)
    T = losses.shape[0]
    costs = broadcast_rounds(costs, T, "costs")
    if np.any((costs < 0) | (costs > 0.5)):
        raise DomainError("abstention costs must lie in [0, 1/2]")
    etas = broadcast_rounds(eta, T, "eta")
    if np.any(etas <= 0):
        raise DomainError("learning rates must be positive")
    cum = np.cumsum(losses, axis=0)
    prev = np.vstack([np.zeros((1, losses.shape[1]), dtype=np.int64), cum[:-1]])
    q = softmax_posterior(prev, etas)
    p = np.clip((q * advice).sum(axis=1), 0.0, 1.0)
    r = np.clip((q * losses).sum(axis=1), 0.0, 1.0)
    p_star = np.maximum(p, 1.0 - p)
    return Trace(
        p=p,
        k_star=(p >= 0.5).astype(np.int8),
        alpha=2.0 * (1.0 - p_star),
        r=r,
        mix_loss=mix_loss_from_r(r, etas),
        expected_loss=expected_abstain_loss(r, costs),
        eta=etas,
        cost=costs,
        outcomes=outcomes.astype(np.int64),
        expert_totals=cum[-1].copy() if T else np.zeros(losses.shape[1], dtype=np.int64),
    )
