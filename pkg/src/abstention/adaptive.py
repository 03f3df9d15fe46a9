"""Abstaining forecaster for time-varying costs, with a self-tuned learning rate.

The rate starts at 1 and shrinks as ``min(sqrt(ln N / d), 1)``, where ``d``
counts the rounds on which the current rate was at least ``2(1 - 2c_t)``,
i.e. rounds where the abstention cost was too close to 1/2 for the current
rate.  Since the counter depends only on the cost sequence, the whole rate
schedule can be computed ahead of the losses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    ForecasterState,
    Trace,
    _check_cost,
    broadcast_rounds,
    exact_run,
    step,
)


@dataclass(frozen=True)
class TsybakovParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    @property
    def exponent(self) -> float:
        """Power of ``x`` on the right-hand side of the margin condition."""
        return self.alpha / (1.0 - self.alpha)


def as_costs(costs) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(costs, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("a cost schedule needs at least one round")
    if np.any((arr < 0) | (arr > 0.5)):
        raise DomainError("abstention costs must lie in [0, 1/2]")
    return arr


def breakpoints(costs) -> np.ndarray:
    """Per-round thresholds ``2(1 - 2c_t)`` below which the loss is mixable."""
    return 2.0 * (1.0 - 2.0 * as_costs(costs))


def _next_eta(log_n: float, d: int) -> float:
    if log_n == 0.0:
        # Single expert: the posterior ignores the rate, keep it positive.
        return 1.0
    return min(math.sqrt(log_n / d), 1.0)


@dataclass(frozen=True)
class AdaptiveState:
    cum_losses: np.ndarray
    d: int = 1
    eta: float = 1.0
    round: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("violation counter starts at 1")
        if not 0 < self.eta <= 1:
            raise DomainError(f"adaptive rate must lie in (0, 1], got {self.eta}")
        object.__setattr__(self, "cum_losses", np.asarray(self.cum_losses, dtype=np.int64))

    @classmethod
    def initial(cls, n: int) -> "AdaptiveState":
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.cum_losses.size


def adaptive_step(state: AdaptiveState, advice, y: int, c_t: float, rng: np.random.Generator):
    """Predict with the current rate, then update the counter and the rate."""
    c_t = _check_cost(c_t)
    inner = ForecasterState(state.cum_losses, state.eta, state.round)
    decision, stats, nxt = step(inner, advice, y, c_t, rng)
    d = state.d + int(state.eta >= 2.0 * (1.0 - 2.0 * c_t))
    eta = _next_eta(math.log(state.n), d)
    return decision, stats, AdaptiveState(nxt.cum_losses, d, eta, state.round + 1)


def eta_schedule(costs, n: int):
    """Rates used in each round and the counter value after each round.

    Returns ``(etas, d, increments)``, each of length T.
    """
    costs = as_costs(costs)
    log_n = math.log(n)
    T = costs.size
    etas = np.empty(T)
    d = np.empty(T, dtype=np.int64)
    inc = np.empty(T, dtype=bool)
    thresholds = breakpoints(costs)
    eta, count = 1.0, 1
    for t in range(T):
        etas[t] = eta
        inc[t] = eta >= thresholds[t]
        count += int(inc[t])
        d[t] = count
        eta = _next_eta(log_n, count)
    return etas, d, inc


def adaptive_exact_run(advice, outcomes, costs) -> Trace:
    advice = np.asarray(advice)
    costs = broadcast_rounds(costs, advice.shape[0], "costs")
    etas, d, _ = eta_schedule(costs, advice.shape[1])
    trace = exact_run(advice, outcomes, costs, etas)
    return Trace(**{**trace.__dict__, "d": d})


def hard_rounds(eta: float, costs, strict: bool = False) -> int:
    """Number of rounds with ``2(1-2c_t) <= eta`` (``<`` when ``strict``)."""
    if not eta > 0:
        raise DomainError(f"learning rate must be positive, got {eta}")
    b = breakpoints(costs)
    return int(np.count_nonzero(b < eta if strict else b <= eta))


def nonstrict_bound(eta: float, costs, n: int) -> float:
    """``ln n / eta + eta * hard_rounds(eta) / 8`` with the non-strict count."""
    return math.log(n) / eta + eta * hard_rounds(eta, costs) / 8.0


def fixed_rate_bound(eta: float, costs, n: int) -> float:
    """Regret bound of the fixed-rate forecaster under changing costs (strict count)."""
    return math.log(n) / eta + eta * hard_rounds(eta, costs, strict=True) / 8.0


@dataclass(frozen=True)
class OptimalBound:
    eta_star: float
    r_star: float
    # Same rate evaluated with the non-strict count; larger only when
    # eta_star sits exactly on a breakpoint.
    b_at_eta_star: float


def optimal_bound(costs, n: int) -> OptimalBound:
    """Exact minimum over eta > 0 of the fixed-rate bound.

    The strict count is constant on each interval ``(lo, hi]`` between
    consecutive distinct breakpoints, where the bound is convex in eta; the
    minimum is therefore at a breakpoint or at an interior stationary point
    ``sqrt(8 ln n / k)``.
    """
    if n < 2:
        raise DomainError("optimal bound needs at least two experts")
    log_n = math.log(n)
    b = np.sort(breakpoints(costs))
    u = np.unique(b)
    pos = u[u > 0]

    cand_eta = [pos]
    cand_val = [log_n / pos + pos * np.searchsorted(b, pos, side="left") / 8.0]

    lows = np.concatenate([[0.0], pos])
    highs = np.concatenate([pos, [np.inf]])
    k = np.searchsorted(b, lows, side="right")
    has_k = k > 0
    s = np.full(lows.shape, np.nan)
    s[has_k] = np.sqrt(8.0 * log_n / k[has_k])
    inside = has_k & (s > lows) & (s <= highs)
    cand_eta.append(s[inside])
    cand_val.append(log_n / s[inside] + s[inside] * k[inside] / 8.0)

    etas = np.concatenate(cand_eta)
    vals = np.concatenate(cand_val)
    i = int(np.argmin(vals))
    eta_star = float(etas[i])
    return OptimalBound(eta_star, float(vals[i]), nonstrict_bound(eta_star, costs, n))


def adaptive_regret_bound(costs, n: int) -> float:
    """Regret guarantee of the adaptive forecaster: ``15/8 R* + 5/4 sqrt(ln n)``."""
    return 15.0 / 8.0 * optimal_bound(costs, n).r_star + 1.25 * math.sqrt(math.log(n))


def tsybakov_eta(n: int, T: int, alpha: float) -> float:
    """Fixed rate ``(ln n / T)^((1-alpha)/(2-alpha))`` for margin-condition costs."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if T < 1:
        raise DomainError("T must be positive")
    return (math.log(n) / T) ** ((1.0 - alpha) / (2.0 - alpha))


def tsybakov_rate(n: int, T: int, alpha: float) -> float:
    """Order of the regret under the margin condition, without constants."""
    return math.log(n) ** (1.0 / (2.0 - alpha)) * T ** ((1.0 - alpha) / (2.0 - alpha))
