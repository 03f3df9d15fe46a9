"""Sequences of advice, outcomes and costs for the forecasters to play against.

Oblivious environments are generated up front and stored as arrays, which
makes replay and serialization trivial.  The one reactive environment is the
two-expert adversary that answers every committed prediction with the
opposite label.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .adaptive import TsybakovParams, as_costs
from .core import (
    Decision,
    DecisionPolicy,
    DomainError,
    ShapeError,
    aggregate,
    decision_policy,
    softmax_posterior,
)
from .seeding import stream

ABSTAIN = int(Decision.ABSTAIN)


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConstructionError(ValueError):
    """A cost schedule with the requested properties could not be built."""


class Round(NamedTuple):
    advice: np.ndarray
    outcome: int
    cost: float


@dataclass(frozen=True)
class ObliviousEnvironment:
    """Advice ``(T, N)``, outcomes ``(T,)`` and costs ``(T,)`` fixed in advance.

    ``k`` is None for binary outcomes, else the number of classes (labels
    ``1..k``).
    """

    advice: np.ndarray
    outcomes: np.ndarray
    costs: np.ndarray
    k: int | None = None

    def __post_init__(self):
        advice = np.asarray(self.advice, dtype=np.int64)
        outcomes = np.asarray(self.outcomes, dtype=np.int64)
        costs = np.asarray(self.costs, dtype=float)
        if advice.ndim != 2 or advice.shape[1] == 0:
            raise ShapeError(f"advice must have shape (T, N) with N >= 1, got {advice.shape}")
        T = advice.shape[0]
        if costs.ndim == 0:
            costs = np.full(T, float(costs))
        if outcomes.shape != (T,) or costs.shape != (T,):
            raise ShapeError("advice, outcomes and costs must cover the same rounds")
        lo, hi = (0, 1) if self.k is None else (1, self.k)
        if np.any((advice < lo) | (advice > hi)) or np.any((outcomes < lo) | (outcomes > hi)):
            raise DomainError(f"labels must lie in {lo}..{hi}")
        if np.any((costs < 0) | (costs > 0.5)):
            raise DomainError("abstention costs must lie in [0, 1/2]")
        object.__setattr__(self, "advice", advice)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "costs", costs)

    @property
    def N(self) -> int:
        return self.advice.shape[1]

    @property
    def T(self) -> int:
        return self.advice.shape[0]

    def __iter__(self) -> Iterator[Round]:
        for t in range(self.T):
            yield Round(self.advice[t], int(self.outcomes[t]), float(self.costs[t]))

    def losses(self) -> np.ndarray:
        return (self.advice != self.outcomes[:, None]).astype(np.int64)

    def expert_totals(self) -> np.ndarray:
        return self.losses().sum(axis=0)

    def with_costs(self, costs) -> "ObliviousEnvironment":
        return ObliviousEnvironment(self.advice, self.outcomes, costs, self.k)

    def to_text(self) -> str:
        header = f"# N={self.N} T={self.T}" + ("" if self.k is None else f" K={self.k}")
        lines = [header]
        for t in range(self.T):
            fields = [str(t + 1), str(self.outcomes[t]), repr(float(self.costs[t]))]
            fields.extend(str(v) for v in self.advice[t])
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_text())


_HEADER = re.compile(r"#\s*N=(\d+)\s+T=(\d+)(?:\s+K=(\d+))?\s*$")


def parse_env(text: str) -> ObliviousEnvironment:
    """Inverse of :meth:`ObliviousEnvironment.to_text`."""
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("empty file", 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise TraceFormatError("expected header '# N=<n> T=<t>'", 1)
    n, T = int(m.group(1)), int(m.group(2))
    k = int(m.group(3)) if m.group(3) else None
    if n < 1:
        raise TraceFormatError("N must be at least 1", 1)
    advice = np.empty((T, n), dtype=np.int64)
    outcomes = np.empty(T, dtype=np.int64)
    costs = np.empty(T)
    records = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    lo, hi = (0, 1) if k is None else (1, k)
    for t, (lineno, ln) in enumerate(records):
        if t >= T:
            raise TraceFormatError(f"more than T={T} records", lineno)
        fields = [f.strip() for f in ln.split(",")]
        if len(fields) != n + 3:
            raise TraceFormatError(f"expected {n + 3} fields, got {len(fields)}", lineno)
        try:
            idx = int(fields[0])
            y = int(fields[1])
            c = float(fields[2])
            row = [int(f) for f in fields[3:]]
        except ValueError as exc:
            raise TraceFormatError(str(exc), lineno) from None
        if idx != t + 1:
            raise TraceFormatError(f"expected round {t + 1}, got {idx}", lineno)
        if not lo <= y <= hi or any(not lo <= v <= hi for v in row):
            raise TraceFormatError(f"labels must lie in {lo}..{hi}", lineno)
        if not 0.0 <= c <= 0.5:
            raise TraceFormatError(f"cost {c} outside [0, 1/2]", lineno)
        outcomes[t], costs[t], advice[t] = y, c, row
    if len(records) < T:
        raise TraceFormatError(f"expected {T} records, got {len(records)}", len(lines) + 1)
    return ObliviousEnvironment(advice, outcomes, costs, k)


def replay_env(source, costs=0.0) -> ObliviousEnvironment:
    """Load an environment from a trace file, or wrap a ``(T, N)`` loss matrix.

    A loss matrix is realized with all outcomes 0 and advice equal to the
    losses, so the experts' losses are exactly the matrix entries.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            return parse_env(fh.read())
    losses = np.asarray(source)
    if losses.ndim != 2:
        raise ShapeError(f"loss matrix must be 2-D, got shape {losses.shape}")
    return ObliviousEnvironment(losses, np.zeros(losses.shape[0], dtype=np.int64), costs)


def iid_env(n: int, T: int, rates, bias: float, seed: int, costs=0.0) -> ObliviousEnvironment:
    """Bernoulli(bias) labels; expert i flips each label with probability rates[i]."""
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (n,))
    if np.any((rates < 0) | (rates > 1)) or not 0 <= bias <= 1:
        raise DomainError("rates and bias must lie in [0, 1]")
    rng = stream(seed, 0)
    y = (rng.random(T) < bias).astype(np.int64)
    flips = rng.random((T, n)) < rates
    return ObliviousEnvironment(np.where(flips, 1 - y[:, None], y[:, None]), y, costs)


def iid_multiclass_env(n: int, T: int, k: int, rates, seed: int, costs=0.0) -> ObliviousEnvironment:
    """Uniform labels in 1..k; expert i errs w.p. rates[i], then names a uniform wrong class."""
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (n,))
    rng = stream(seed, 0)
    y = rng.integers(1, k + 1, size=T)
    wrong = rng.random((T, n)) < rates
    shift = rng.integers(1, k, size=(T, n))
    other = (y[:, None] - 1 + shift) % k + 1
    return ObliviousEnvironment(np.where(wrong, other, y[:, None]), y, costs, k)


def alternating_env(T: int, costs=0.0) -> ObliviousEnvironment:
    """Two constant experts (all zeros, all ones) and labels 0, 1, 0, 1, ..."""
    y = np.arange(T, dtype=np.int64) % 2
    return ObliviousEnvironment(np.tile([0, 1], (T, 1)), y, costs)


def random_loss_matrix(T: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Binary loss matrix with a random error rate per expert."""
    rates = rng.random(n)
    return (rng.random((T, n)) < rates).astype(np.int64)


# Cost schedules under the margin condition

@dataclass(frozen=True)
class TsybakovCheck:
    passed: bool
    worst_x: float | None
    worst_excess: float


def _margin_excess(costs: np.ndarray, params: TsybakovParams):
    margins = np.sort(0.5 - costs)
    T = margins.size
    values = np.unique(margins[margins < 0.5])
    if values.size == 0:
        return values, np.empty(0)
    frac = np.searchsorted(margins, values, side="right") / T
    return values, frac - params.beta * np.power(values, params.exponent)


def verify_tsybakov(costs, params: TsybakovParams) -> TsybakovCheck:
    """Check the margin condition for every ``x`` in ``(0, 1/2]``.

    The empirical fraction of margins below ``x`` is a step function, so the
    condition holds everywhere iff it holds just to the right of each margin
    value ``v``, which by continuity means ``#{m <= v}/T <= beta v^a``.
    Margins equal to 1/2 never count for ``x <= 1/2``.
    """
    values, excess = _margin_excess(as_costs(costs), params)
    if values.size == 0:
        return TsybakovCheck(True, None, -math.inf)
    i = int(np.argmax(excess))
    return TsybakovCheck(bool(excess[i] <= 0), float(values[i]), float(excess[i]))


def tsybakov_costs(T: int, params: TsybakovParams, seed: int) -> np.ndarray:
    """Randomly ordered costs whose margins are as small as the condition allows.

    The k-th smallest margin is ``((k/T)/beta)^((1-alpha)/alpha)`` capped at
    1/2.  With ``alpha = 0`` the condition only limits the fraction of
    margins below 1/2 to ``beta``, and a constant margin of
    ``min(1/beta, 1/2)`` is used.
    """
    if T < 1:
        raise DomainError("T must be positive")
    if params.alpha == 0:
        margins = np.full(T, min(1.0 / params.beta, 0.5))
    else:
        k = np.arange(1, T + 1)
        margins = ((k / T) / params.beta) ** ((1.0 - params.alpha) / params.alpha)
    costs = np.clip(0.5 - np.minimum(margins, 0.5), 0.0, 0.5)
    # Rounding in 0.5 - m can pull a margin a few ulps under its bound.
    for _ in range(64):
        m = 0.5 - costs
        order = np.argsort(m, kind="stable")
        frac = np.searchsorted(m[order], m[order], side="right") / T
        bad = (frac > params.beta * np.power(m[order], params.exponent)) & (m[order] < 0.5)
        if not bad.any():
            break
        # Step whichever of c, 0.5 - c has the coarser spacing so the margin
        # really moves (0.5 - x is exact for x in [0.25, 0.5]).
        c = costs[order[bad]]
        costs[order[bad]] = np.where(
            c >= 0.25, np.nextafter(c, -np.inf), 0.5 - np.nextafter(0.5 - c, np.inf)
        )
    else:
        raise ConstructionError("could not satisfy the margin condition in floating point")
    costs = np.maximum(costs, 0.0)
    costs = stream(seed, 1).permutation(costs)
    check = verify_tsybakov(costs, params)
    if not check.passed:
        raise ConstructionError(f"schedule violates the margin condition at x={check.worst_x}")
    return costs


def hand_built_schedules(T: int, n: int) -> dict[str, np.ndarray]:
    """Deterministic cost schedules aimed at the edges of the adaptive rate.

    They cover the extremes, costs whose threshold ``2(1-2c)`` sits exactly
    on (or one ulp off) the starting rate 1, abrupt regime switches, ramps,
    and a ladder whose thresholds track the rates ``sqrt(ln n / t)``.
    """
    if T < 2 or n < 2:
        raise DomainError("need T >= 2 and n >= 2")
    half = T // 2
    t = np.arange(1, T + 1)
    ladder = 0.5 - np.minimum(np.sqrt(math.log(n) / t), 1.0) / 4.0
    return {
        "all-half": np.full(T, 0.5),
        "all-zero": np.zeros(T),
        "on-threshold": np.full(T, 0.25),
        "below-threshold": np.full(T, np.nextafter(0.25, 0.0)),
        "alternating": np.where(t % 2 == 1, 0.0, 0.5),
        "ramp-up": np.linspace(0.0, 0.5, T),
        "ramp-down": np.linspace(0.5, 0.0, T),
        "half-then-zero": np.where(t <= half, 0.5, 0.0),
        "zero-then-half": np.where(t <= half, 0.0, 0.5),
        "rate-ladder": np.clip(ladder, 0.0, 0.5),
    }


# Reactive adversary against two constant experts

CONSTANT_EXPERTS = np.array([0, 1], dtype=np.int64)


def adversary_response(decision, totals):
    """Label chosen by the adversary given the learner's realized decision.

    A committed prediction is answered with the opposite label; an
    abstention with the label of the current best expert (expert 1, the
    all-zeros expert, on ties).  Works elementwise on batched arrays with
    ``totals`` of shape ``(..., 2)``.
    """
    decision = np.asarray(decision)
    totals = np.asarray(totals)
    leader = np.where(totals[..., 0] <= totals[..., 1], 0, 1)
    return np.where(decision == ABSTAIN, leader, 1 - decision)


@dataclass
class OppositeLabelAdversary:
    """Reactive environment: decision in, outcome out, strictly alternating."""

    T: int
    t: int = 0
    expert_totals: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))

    @property
    def advice(self) -> np.ndarray:
        return CONSTANT_EXPERTS

    def respond(self, decision) -> int:
        if self.t >= self.T:
            raise RuntimeError("the adversary has already played all rounds")
        y = int(adversary_response(int(decision), self.expert_totals))
        self.expert_totals += CONSTANT_EXPERTS != y
        self.t += 1
        return y


def opposite_label_adversary(T: int) -> OppositeLabelAdversary:
    if T < 1:
        raise DomainError("T must be positive")
    return OppositeLabelAdversary(T)


@dataclass(frozen=True)
class DerandomizedLearner:
    """Abstain iff the abstention probability reaches ``threshold``, else predict k*."""

    threshold: float = 0.5

    def decide(self, policy: DecisionPolicy) -> int:
        return ABSTAIN if policy.alpha >= self.threshold else policy.k_star


@dataclass(frozen=True)
class ConstantLearner:
    decision: int

    def decide(self, policy: DecisionPolicy) -> int:
        return self.decision


def derandomized_learner(threshold: float = 0.5) -> DerandomizedLearner:
    return DerandomizedLearner(threshold)


DETERMINISTIC_LEARNERS = {
    "derandomized": DerandomizedLearner(0.5),
    "cautious": DerandomizedLearner(0.25),
    "follow-leader": DerandomizedLearner(math.inf),
    "always-abstain": ConstantLearner(ABSTAIN),
    "always-zero": ConstantLearner(0),
    "always-one": ConstantLearner(1),
}


@dataclass(frozen=True)
class ReactiveResult:
    learner_loss: float
    expert_totals: np.ndarray
    abstentions: int

    @property
    def regret(self) -> float:
        return self.learner_loss - float(self.expert_totals.min())


def play_deterministic(learner, c: float, T: int, eta: float) -> ReactiveResult:
    """Deterministic learner, fed exponential-weights policies, against the adversary."""
    env = opposite_label_adversary(T)
    loss, abstained = 0.0, 0
    for _ in range(T):
        post = softmax_posterior(env.expert_totals, eta)
        decision = learner.decide(decision_policy(aggregate(post, env.advice)))
        y = env.respond(decision)
        if decision == ABSTAIN:
            loss += c
            abstained += 1
        else:
            loss += float(decision != y)
    return ReactiveResult(loss, env.expert_totals.copy(), abstained)


def play_randomized(c: float, T: int, eta: float, rngs, sees_decision: bool = True) -> list[ReactiveResult]:
    """Randomized abstaining forecaster against the adversary, one run per generator.

    With ``sees_decision`` the adversary answers the realized (sampled)
    decision.  Otherwise it only knows the policy and answers the decision a
    derandomized learner would make from it, so the coin flips stay hidden.
    Runs are batched across generators; each run draws its own T uniforms.
    """
    u = np.stack([g.random(T) for g in rngs])
    B = u.shape[0]
    totals = np.zeros((B, 2), dtype=np.int64)
    loss = np.zeros(B)
    abstained = np.zeros(B, dtype=np.int64)
    for t in range(T):
        p = softmax_posterior(totals, eta)[:, 1]
        k_star = (p >= 0.5).astype(np.int64)
        alpha = 2.0 * (1.0 - np.maximum(p, 1.0 - p))
        abst = u[:, t] < alpha
        decision = np.where(abst, ABSTAIN, k_star)
        if sees_decision:
            y = adversary_response(decision, totals)
        else:
            y = adversary_response(np.where(alpha >= 0.5, ABSTAIN, k_star), totals)
        loss += np.where(abst, c, (decision != y).astype(float))
        abstained += abst
        totals += CONSTANT_EXPERTS[None, :] != y[:, None]
    return [ReactiveResult(float(loss[b]), totals[b].copy(), int(abstained[b])) for b in range(B)]
