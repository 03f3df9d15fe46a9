"""K-class variant of the abstaining forecaster.

Classes are labelled ``1..K``.  The learner predicts the class with the
largest aggregated posterior mass ``p*`` and abstains with probability
``min(2(1 - p*), 1)``, so it always abstains once no class holds a majority.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Decision,
    DomainError,
    ForecasterState,
    RoundStats,
    ShapeError,
    Trace,
    _check_cost,
    _check_same_length,
    broadcast_rounds,
    mix_loss_from_r,
    expected_abstain_loss,
    tuned_regret_bound,
    posterior,
    softmax_posterior,
)

ABSTAIN = int(Decision.ABSTAIN)


def as_class_advice(labels, k: int) -> np.ndarray:
    if k < 2:
        raise DomainError(f"need at least two classes, got {k}")
    arr = np.asarray(labels)
    if arr.size == 0:
        raise ShapeError("advice must be non-empty")
    if np.any((arr < 1) | (arr > k)) or not np.all(arr == np.round(arr)):
        raise DomainError(f"class labels must be integers in 1..{k}")
    return arr.astype(np.int64)


def _check_class(y, k: int) -> int:
    if not (isinstance(y, (int, np.integer)) and 1 <= y <= k):
        raise DomainError(f"outcome must be a class in 1..{k}, got {y!r}")
    return int(y)


def class_distribution(post, labels, k: int) -> np.ndarray:
    """Posterior mass assigned to each class, index ``j`` holding class ``j+1``."""
    labels = as_class_advice(labels, k)
    post = np.asarray(post, dtype=float)
    _check_same_length(post, labels)
    return np.bincount(labels - 1, weights=post, minlength=k)


@dataclass(frozen=True)
class MulticlassPolicy:
    probs: np.ndarray
    p_star: float
    k_star: int
    alpha: float


def multiclass_policy(dist) -> MulticlassPolicy:
    dist = np.asarray(dist, dtype=float)
    j = int(np.argmax(dist))  # first maximum, i.e. lowest class on ties
    p_star = float(dist[j])
    return MulticlassPolicy(dist, p_star, j + 1, min(2.0 * (1.0 - p_star), 1.0))


def multiclass_losses(labels, y: int, k: int) -> np.ndarray:
    return (as_class_advice(labels, k) != _check_class(y, k)).astype(np.int8)


def multiclass_step(state: ForecasterState, labels, y: int, c: float, rng: np.random.Generator, k: int):
    """Play one K-class round; the decision is a class or ``ABSTAIN``."""
    c = _check_cost(c)
    y = _check_class(y, k)
    labels = as_class_advice(labels, k)
    _check_same_length(state.cum_losses, labels)
    post = posterior(state)
    policy = multiclass_policy(class_distribution(post, labels, k))
    decision = ABSTAIN if rng.random() < policy.alpha else policy.k_star
    losses = (labels != y).astype(np.int8)
    r = float(np.clip(post @ losses, 0.0, 1.0))
    wrong = float(policy.k_star != y)
    stats = RoundStats(
        r=r,
        mix_loss=mix_loss_from_r(r, state.eta),
        expected_loss=policy.alpha * c + (1.0 - policy.alpha) * wrong,
        realized_loss=c if decision == ABSTAIN else float(decision != y),
        losses=losses,
        cost=c,
        eta=state.eta,
    )
    nxt = ForecasterState(state.cum_losses + losses, state.eta, state.round + 1)
    return decision, stats, nxt


def case_bound(r, c):
    """Upper bound ``r + (2c - 1) min(r, 1 - r)`` on the K-class expected loss.

    The same expression is the exact binary expected loss; with more classes
    it is only an upper bound because ``r`` may exceed ``p*``.
    """
    return expected_abstain_loss(r, c)


def multiclass_regret_bound(n: int, T: int, c: float) -> float:
    return tuned_regret_bound(n, T, c)


def multiclass_exact_run(labels, outcomes, k: int, costs, eta) -> Trace:
    """Whole-sequence K-class run with closed-form expected losses.

    In the returned trace ``p`` holds ``p*`` and ``k_star`` holds the
    predicted class.
    """
    labels = as_class_advice(labels, k)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if labels.ndim != 2 or outcomes.shape != (labels.shape[0],):
        raise ShapeError(f"labels {labels.shape} and outcomes {outcomes.shape} do not align")
    if np.any((outcomes < 1) | (outcomes > k)):
        raise DomainError(f"outcomes must be classes in 1..{k}")
    T, _ = labels.shape
    costs = broadcast_rounds(costs, T, "costs")
    if np.any((costs < 0) | (costs > 0.5)):
        raise DomainError("abstention costs must lie in [0, 1/2]")
    etas = broadcast_rounds(eta, T, "eta")
    if np.any(etas <= 0):
        raise DomainError("learning rates must be positive")
    losses = (labels != outcomes[:, None]).astype(np.int64)
    cum = np.cumsum(losses, axis=0)
    prev = np.vstack([np.zeros((1, labels.shape[1]), dtype=np.int64), cum[:-1]])
    q = softmax_posterior(prev, etas)
    dist = np.stack([(q * (labels == j)).sum(axis=1) for j in range(1, k + 1)], axis=1)
    j = np.argmax(dist, axis=1)
    p_star = dist[np.arange(T), j]
    k_star = j + 1
    alpha = np.minimum(2.0 * (1.0 - p_star), 1.0)
    r = np.clip((q * losses).sum(axis=1), 0.0, 1.0)
    return Trace(
        p=p_star,
        k_star=k_star.astype(np.int8),
        alpha=alpha,
        r=r,
        mix_loss=mix_loss_from_r(r, etas),
        expected_loss=alpha * costs + (1.0 - alpha) * (k_star != outcomes),
        eta=etas,
        cost=costs,
        outcomes=outcomes,
        expert_totals=cum[-1].copy(),
    )
