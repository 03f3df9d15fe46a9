"""Littlestone dimension, the Standard Optimal Algorithm and finite expert covers.

Classes are small tables of binary hypotheses over a finite domain.  Version
spaces are Python integers used as bitsets over the hypotheses, so
restricting to ``h(x) = b`` is a single ``&`` with a precomputed mask.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .core import DomainError, exact_run, tuned_eta

MAX_DOMAIN = 12
MAX_HYPOTHESES = 4096


class ResourceLimitError(RuntimeError):
    pass


class RealizabilityError(ValueError):
    """No hypothesis in the class is consistent with the observed history."""


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    """Distinct hypotheses as rows of a ``(H, m)`` 0/1 table."""

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int8)
        if table.ndim != 2 or table.shape[0] == 0:
            raise DomainError("a hypothesis class needs at least one hypothesis")
        if table.shape[1] > MAX_DOMAIN or table.shape[0] > MAX_HYPOTHESES:
            raise ResourceLimitError(
                f"class of {table.shape[0]} hypotheses on {table.shape[1]} points exceeds "
                f"the {MAX_HYPOTHESES} x {MAX_DOMAIN} limit"
            )
        if np.any((table != 0) & (table != 1)):
            raise DomainError("hypotheses must be 0/1 valued")
        if np.unique(table, axis=0).shape[0] != table.shape[0]:
            raise DomainError("hypotheses must be pairwise distinct")
        object.__setattr__(self, "table", table)

    @property
    def m(self) -> int:
        return self.table.shape[1]

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @cached_property
    def masks(self) -> list[tuple[int, int]]:
        """Per instance x, the bitsets of hypotheses labelling x with 0 and with 1."""
        out = []
        for x in range(self.m):
            ones = sum(1 << int(j) for j in np.flatnonzero(self.table[:, x]))
            out.append((self.full & ~ones, ones))
        return out

    @cached_property
    def _memo(self) -> dict[int, int]:
        return {}

    def ldim_of(self, V: int) -> int:
        """Littlestone dimension of the subclass ``V`` (-1 when empty)."""
        if V == 0:
            return -1
        if V & (V - 1) == 0:
            return 0
        memo = self._memo
        if V in memo:
            return memo[V]
        cap = V.bit_count().bit_length() - 1  # floor(log2 |V|)
        best = 0
        for zero, one in self.masks:
            v0, v1 = V & zero, V & one
            if v0 and v1:
                best = max(best, 1 + min(self.ldim_of(v0), self.ldim_of(v1)))
                if best == cap:
                    break
        memo[V] = best
        return best

    def consistent(self, history) -> int:
        V = self.full
        for x, y in history:
            V &= self.masks[x][y]
        return V

    def subclass(self, rows) -> "HypothesisClass":
        return HypothesisClass(self.table[np.asarray(rows)])

    @classmethod
    def all_functions(cls, m: int) -> "HypothesisClass":
        idx = np.arange(2**m)
        return cls((idx[:, None] >> np.arange(m)) & 1)

    @classmethod
    def thresholds(cls, m: int) -> "HypothesisClass":
        """``h_k(x) = 1{x >= k}`` for k = 0..m on the ordered domain 0..m-1."""
        return cls((np.arange(m)[None, :] >= np.arange(m + 1)[:, None]).astype(np.int8))

    def to_text(self) -> str:
        rows = ["".join(str(v) for v in row) for row in self.table]
        return "\n".join([f"# m={self.m}", *rows]) + "\n"


def parse_class(text: str) -> HypothesisClass:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or not lines[0].startswith("#"):
        raise DomainError("line 1: expected header '# m=<domain size>'")
    try:
        m = int(lines[0].lstrip("#").strip().removeprefix("m="))
    except ValueError:
        raise DomainError("line 1: expected header '# m=<domain size>'") from None
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        if len(ln) != m or set(ln) - {"0", "1"}:
            raise DomainError(f"line {lineno}: expected {m} characters of 0/1")
        rows.append([int(ch) for ch in ln])
    return HypothesisClass(np.array(rows, dtype=np.int8).reshape(-1, m))


def read_class(path: str | os.PathLike) -> HypothesisClass:
    with open(path, encoding="ascii") as fh:
        return parse_class(fh.read())


def ldim(cls: HypothesisClass) -> int:
    return cls.ldim_of(cls.full)


def _soa(cls: HypothesisClass, V: int, x: int) -> int:
    zero, one = cls.masks[x]
    return int(cls.ldim_of(V & one) >= cls.ldim_of(V & zero))


def soa_predict(cls: HypothesisClass, history, x: int) -> int:
    """Label whose consistent subclass has the larger dimension (1 on ties)."""
    V = cls.consistent(history)
    if V == 0:
        raise RealizabilityError("history is not realizable by the class")
    return _soa(cls, V, x)


def soa_mistakes(cls: HypothesisClass, xs, ys) -> int:
    history, mistakes = [], 0
    for x, y in zip(xs, ys):
        mistakes += soa_predict(cls, history, x) != y
        history.append((x, y))
    return mistakes


def expert_predictions(cls: HypothesisClass, flips, xs) -> list[int]:
    """Predictions of the cover expert that overrides SOA at the rounds in ``flips``.

    The expert treats its own prediction as the true label when updating its
    version space.  Once that space is empty it predicts 1.
    """
    V = cls.full
    out = []
    for t, x in enumerate(xs):
        b = _soa(cls, V, x) if V else 1
        if t in flips:
            b = 1 - b
        V &= cls.masks[x][b]
        out.append(b)
    return out


def cover_size_bound(T: int, L: int) -> int:
    return sum(math.comb(T, i) for i in range(L + 1))


@dataclass(frozen=True)
class ExpertCover:
    cls: HypothesisClass
    T: int
    L: int
    subsets: tuple[frozenset, ...]

    def __len__(self) -> int:
        return len(self.subsets)

    def predictions(self, xs) -> np.ndarray:
        """``(len(cover), len(xs))`` array of every expert's predictions."""
        xs = list(xs)
        if len(xs) > self.T:
            raise DomainError(f"cover built for {self.T} rounds, got {len(xs)}")
        return np.array([expert_predictions(self.cls, s, xs) for s in self.subsets], dtype=np.int8)

    def covers(self, xs) -> bool:
        """Whether every hypothesis is reproduced by some expert on ``xs``."""
        xs = list(xs)
        preds = {row.tobytes() for row in self.predictions(xs)}
        return all(row.tobytes() in preds for row in self.cls.table[:, xs])


def expert_cover(cls: HypothesisClass, T: int, budget: int = 100_000) -> ExpertCover:
    """All experts indexed by subsets of ``range(T)`` of size at most ``ldim``."""
    L = ldim(cls)
    if T < L:
        raise DomainError(f"horizon T={T} is below the Littlestone dimension {L}")
    if cover_size_bound(T, L) > budget:
        raise ResourceLimitError(f"cover of {cover_size_bound(T, L)} experts exceeds budget {budget}")
    subsets = tuple(frozenset(s) for i in range(L + 1) for s in combinations(range(T), i))
    return ExpertCover(cls, T, L, subsets)


def cover_regret_bound(L: int, T: int, c: float) -> float:
    """``min(L ln(eT/L) / (2(1-2c)), sqrt(L T ln(eT/L) / 2))``; zero for L = 0."""
    if L == 0:
        return 0.0
    lg = L * math.log(math.e * T / L)
    fast = math.inf if c == 0.5 else lg / (2.0 * (1.0 - 2.0 * c))
    return min(fast, math.sqrt(T * lg / 2.0))


@dataclass(frozen=True)
class CoverRunResult:
    learner_loss: float
    best_hypothesis_loss: int
    best_expert_loss: int
    cover_size: int
    L: int
    eta: float
    bound: float

    @property
    def regret(self) -> float:
        return self.learner_loss - self.best_hypothesis_loss

    @property
    def passed(self) -> bool:
        return self.regret <= self.bound + 1e-9


def cover_run(cls: HypothesisClass, xs, ys, c: float, cover: ExpertCover | None = None) -> CoverRunResult:
    """Abstaining forecaster over a cover, scored against the best hypothesis.

    Exact-expectation mode: the learner's loss is the sum of closed-form
    per-round expected losses.
    """
    xs, ys = list(xs), np.asarray(ys, dtype=np.int64)
    T = len(xs)
    cover = cover if cover is not None else expert_cover(cls, T)
    advice = cover.predictions(xs).T
    eta = tuned_eta(len(cover), T, c)
    if eta == 0.0:
        eta = 1.0  # one expert and c = 1/2: the rate is irrelevant
    trace = exact_run(advice, ys, c, eta)
    h_losses = (cls.table[:, xs] != ys[None, :]).sum(axis=1)
    return CoverRunResult(
        learner_loss=trace.learner_loss,
        best_hypothesis_loss=int(h_losses.min()),
        best_expert_loss=int(trace.expert_totals.min()),
        cover_size=len(cover),
        L=cover.L,
        eta=eta,
        bound=cover_regret_bound(cover.L, T, c),
    )
