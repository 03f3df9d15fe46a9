"""Run configuration, regret accounting, reports, sweeps and the lower-bound demo.

A run is fully determined by its :class:`RunConfig`: the environment, cost
schedule and sampled decisions all draw from streams derived from
``config.seed``.  Reports serialize with sorted keys so identical configs
give byte-identical files.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import adaptive as ad
from . import checks
from .core import Trace, exact_run, tuned_eta, tuned_regret_bound
from .environments import (
    DETERMINISTIC_LEARNERS,
    ObliviousEnvironment,
    TsybakovParams,
    alternating_env,
    hand_built_schedules,
    iid_env,
    iid_multiclass_env,
    play_deterministic,
    play_randomized,
    replay_env,
    tsybakov_costs,
)
from .littlestone import HypothesisClass, cover_regret_bound, expert_cover, read_class
from .multiclass import multiclass_exact_run
from .seeding import derive_seed, stream

MODES = ("binary-fixed-c", "binary-changing-c", "adaptive", "multiclass", "littlestone")
ETA_POLICIES = ("explicit", "tuned", "tsybakov", "adaptive")
ENVIRONMENTS = ("iid", "alternating", "replay", "adversary", "realizable")
CONFIDENCE = 0.95
BOUND_TOL = checks.BOUND_TOL


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``costs`` selects the cost schedule: ``constant`` (every round costs
    ``c``), ``tsybakov`` (built from ``alpha`` and ``beta``), ``env`` (the
    replayed environment's own costs), ``file:<path>`` (a cost file) or
    ``hand:<name>`` (one of the hand-built stress schedules).  ``rates``
    lists per-expert error rates; the last value repeats for the remaining
    experts.  In littlestone mode ``rates[0]`` is the label-noise rate of
    the ``iid`` environment and the class is read from ``class_file``, or is
    every function on ``domain`` points.
    """

    mode: str = "binary-fixed-c"
    n: int = 2
    T: int = 1000
    k: int = 2
    c: float = 0.25
    costs: str = "constant"
    alpha: float = 0.5
    beta: float = 1.0
    eta_policy: str = "tuned"
    eta: float = 1.0
    env: str = "iid"
    rates: tuple = (0.1, 0.5)
    bias: float = 0.5
    env_file: str = ""
    class_file: str = ""
    domain: int = 3
    adversary: str = "decision"
    seed: int = 0
    expectation: str = "exact"
    runs: int = 200

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        self.validate()

    def validate(self) -> None:
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        need(self.mode in MODES, "mode", f"must be one of {', '.join(MODES)}")
        need(self.eta_policy in ETA_POLICIES, "eta_policy", f"must be one of {', '.join(ETA_POLICIES)}")
        need(self.env in ENVIRONMENTS, "env", f"must be one of {', '.join(ENVIRONMENTS)}")
        need(self.expectation in ("exact", "sampled"), "expectation", "must be exact or sampled")
        need(self.adversary in ("decision", "policy"), "adversary", "must be decision or policy")
        need(self.n >= 1, "n", "need at least one expert")
        need(self.T >= 1, "T", "need at least one round")
        need(self.k >= 2, "k", "need at least two classes")
        need(0.0 <= self.c <= 0.5, "c", "abstention cost must lie in [0, 1/2]")
        need(0.0 <= self.alpha < 1.0, "alpha", "must lie in [0, 1)")
        need(self.beta > 0, "beta", "must be positive")
        need(self.eta > 0, "eta", "must be positive")
        need(self.runs >= 1, "runs", "must be positive")
        need(0 <= self.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
        need(len(self.rates) >= 1 and all(0 <= r <= 1 for r in self.rates), "rates", "need values in [0, 1]")
        need(0 <= self.bias <= 1, "bias", "must lie in [0, 1]")
        need(1 <= self.domain <= 12, "domain", "must lie in 1..12")
        need(
            self.costs in ("constant", "tsybakov", "env") or self.costs.startswith(("file:", "hand:")),
            "costs", "must be constant, tsybakov, env, file:<path> or hand:<name>",
        )
        changing = self.mode in ("binary-changing-c", "adaptive")
        need(changing or self.costs == "constant" or (self.costs == "env" and self.env == "replay"),
             "costs", f"{self.mode} mode needs a constant cost")
        need(self.costs != "env" or self.env == "replay", "costs", "env costs need env=replay")
        need((self.mode == "adaptive") == (self.eta_policy == "adaptive"), "eta_policy",
             "adaptive mode and the adaptive rate go together")
        need(self.mode != "littlestone" or self.eta_policy == "tuned", "eta_policy",
             "littlestone mode uses the tuned rate")
        need(self.mode != "littlestone" or self.env in ("realizable", "iid"), "env",
             "littlestone mode needs env realizable or iid")
        need(self.env != "realizable" or self.mode == "littlestone", "env", "realizable env is for littlestone mode")
        need(self.mode != "multiclass" or self.env in ("iid", "replay"), "env", "multiclass mode needs env iid or replay")
        need(self.env != "replay" or self.env_file, "env_file", "replay needs a file")
        if self.env == "alternating":
            need(self.n == 2, "n", "the alternating environment has two experts")
        if self.env == "adversary":
            need(self.mode == "binary-fixed-c", "mode", "the adversary plays binary-fixed-c")
            need(self.n == 2, "n", "the adversary has two experts")
            need(self.expectation == "sampled", "expectation", "reactive environments need sampled mode")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["rates"] = list(self.rates)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(name: str, raw):
    default = _FIELDS[name].default
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(default, tuple) else raw
    try:
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r}") from None
    return raw.strip()


def make_config(values: dict | None = None, **overrides) -> RunConfig:
    """Build a config from string or typed values; later sources win.

    The adaptive rate is the default for adaptive mode.
    """
    merged = {**(values or {}), **overrides}
    unknown = sorted(set(merged) - set(_FIELDS))
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    typed = {k: _convert(k, v) for k, v in merged.items()}
    if typed.get("mode") == "adaptive" and "eta_policy" not in typed:
        typed["eta_policy"] = "adaptive"
    return RunConfig(**typed)


def read_config(path, overrides: dict | None = None) -> RunConfig:
    """Load the ``[run]`` section of an INI file; ``overrides`` take precedence."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep "T" and "n" distinct
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("run"):
        raise ConfigError("run", f"{path} has no [run] section")
    return make_config(dict(parser.items("run")), **(overrides or {}))


def config_text(config: RunConfig) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["run"] = {k: ",".join(map(repr, v)) if isinstance(v, list) else str(v)
                     for k, v in config.to_dict().items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# Cost files

_COST_HEADER = re.compile(r"#\s*T=(\d+)(.*)$")


def costs_text(costs, **meta) -> str:
    extra = "".join(f" {k}={v!r}" for k, v in meta.items())
    return "\n".join([f"# T={len(costs)}{extra}", *(repr(float(c)) for c in costs)]) + "\n"


def read_costs(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    m = _COST_HEADER.match(lines[0].strip()) if lines else None
    if not m:
        raise ValueError(f"{path}: line 1: expected header '# T=<t> ...'")
    T = int(m.group(1))
    values = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        try:
            c = float(ln)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: not a number: {ln!r}") from None
        if not 0.0 <= c <= 0.5:
            raise ValueError(f"{path}: line {lineno}: cost {c} outside [0, 1/2]")
        values.append(c)
    if len(values) != T:
        raise ValueError(f"{path}: line {len(lines) + 1}: expected {T} costs, got {len(values)}")
    return np.array(values)


# Reports

@dataclass(frozen=True)
class BoundLine:
    name: str
    value: float
    passed: bool


@dataclass
class RegretReport:
    config: RunConfig
    learner_loss: float
    expert_losses: list
    best_expert: int
    regret: float
    bounds: list
    sampled: dict | None = None
    extras: dict = field(default_factory=dict)
    trace: Trace | None = None
    env: ObliviousEnvironment | None = None
    decisions: np.ndarray | None = None
    run_rows: list | None = None

    @property
    def all_passed(self) -> bool:
        return all(b.passed for b in self.bounds)

    def to_dict(self) -> dict:
        return {
            "mode": self.config.mode,
            "config": self.config.to_dict(),
            "learner_loss": self.learner_loss,
            "expert_losses": list(self.expert_losses),
            "best_expert": self.best_expert,
            "regret": self.regret,
            "bounds": [dataclasses.asdict(b) for b in self.bounds],
            "all_passed": self.all_passed,
            "sampled": self.sampled,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def trace_csv(self) -> str:
        t = self.trace
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(checks.TRACE_COLUMNS)
        for i in range(t.T):
            dec = "*" if self.decisions[i] < 0 else str(int(self.decisions[i]))
            w.writerow([
                i + 1, repr(float(t.p[i])), repr(float(t.alpha[i])), dec, int(t.outcomes[i]),
                repr(float(t.cost[i])), repr(float(t.r[i])), repr(float(t.mix_loss[i])),
                repr(float(t.expected_loss[i])), repr(float(t.eta[i])),
                "" if t.d is None else int(t.d[i]),
            ])
        return buf.getvalue()

    def write(self, directory) -> list[str]:
        """Write report.json, config.ini and, when available, trace.csv, env.csv and runs.csv."""
        os.makedirs(directory, exist_ok=True)
        files = {"report.json": self.to_json(), "config.ini": config_text(self.config)}
        if self.trace is not None:
            files["trace.csv"] = self.trace_csv()
        if self.env is not None:
            files["env.csv"] = self.env.to_text()
        if self.run_rows is not None:
            lines = ["run,learner_loss,best_expert_loss,regret"]
            lines += [f"{i},{a!r},{b},{a - b!r}" for i, (a, b) in enumerate(self.run_rows)]
            files["runs.csv"] = "\n".join(lines) + "\n"
        for name, text in files.items():
            with open(os.path.join(directory, name), "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        return sorted(files)

    def summary(self) -> str:
        lines = [
            f"mode {self.config.mode}  N={len(self.expert_losses)} T={self.config.T}  seed={self.config.seed}",
            f"learner loss {self.learner_loss:.6f}  best expert #{self.best_expert} "
            f"loss {min(self.expert_losses)}  regret {self.regret:.6f}",
        ]
        if self.sampled:
            lines.append(f"sampled mean loss {self.sampled['mean_learner_loss']:.6f} "
                         f"+/- {self.sampled['halfwidth']:.6f} over {self.sampled['runs']} runs")
        for b in self.bounds:
            lines.append(f"  {'PASS' if b.passed else 'FAIL'}  {b.name:<14} regret <= {b.value:.6f}")
        return "\n".join(lines)


def hoeffding_halfwidth(T: int, runs: int, confidence: float = CONFIDENCE) -> float:
    """Half-width of a two-sided CI for a mean of ``runs`` sums of T range-1 terms."""
    return math.sqrt(T * math.log(2.0 / (1.0 - confidence)) / (2.0 * runs))


# Building runs

def _rates(config: RunConfig) -> np.ndarray:
    r = list(config.rates)[: config.n]
    return np.array(r + [r[-1]] * (config.n - len(r)))


def _cost_schedule(config: RunConfig, env_costs=None) -> np.ndarray | float:
    src = config.costs
    if src == "constant":
        return config.c
    if src == "env":
        return env_costs
    if src == "tsybakov":
        return tsybakov_costs(config.T, TsybakovParams(config.alpha, config.beta), derive_seed(config.seed, 1))
    if src.startswith("file:"):
        costs = read_costs(src[5:])
    else:
        schedules = hand_built_schedules(config.T, max(config.n, 2))
        name = src[5:]
        if name not in schedules:
            raise ConfigError("costs", f"unknown hand-built schedule {name!r}; choose from {sorted(schedules)}")
        costs = schedules[name]
    if costs.size != config.T:
        raise ConfigError("costs", f"schedule has {costs.size} rounds but T={config.T}")
    return costs


def _environment(config: RunConfig) -> ObliviousEnvironment:
    seed = derive_seed(config.seed, 0)
    if config.env == "replay":
        env = replay_env(config.env_file)
        if env.N != config.n or env.T != config.T:
            raise ConfigError("env_file", f"file has N={env.N} T={env.T}, config says N={config.n} T={config.T}")
        if (env.k is not None) != (config.mode == "multiclass") or (env.k and env.k != config.k):
            raise ConfigError("env_file", "label alphabet does not match the mode")
        return env.with_costs(_cost_schedule(config, env.costs))
    costs = _cost_schedule(config)
    if config.env == "alternating":
        return alternating_env(config.T, costs)
    if config.mode == "multiclass":
        return iid_multiclass_env(config.n, config.T, config.k, _rates(config), seed, costs)
    return iid_env(config.n, config.T, _rates(config), config.bias, seed, costs)


def _fixed_eta(config: RunConfig, n: int, costs) -> float:
    if config.eta_policy == "explicit":
        return config.eta
    if config.eta_policy == "tsybakov":
        if n < 2:
            return 1.0
        return ad.tsybakov_eta(n, config.T, config.alpha)
    # tuned
    if np.ndim(costs) == 0 or np.all(costs == costs[0]):
        c = float(np.ravel(costs)[0])
        eta = tuned_eta(n, config.T, c)
        return eta if eta > 0 else 1.0  # one expert and c = 1/2: any rate gives the same run
    if n < 2:
        return 1.0
    return ad.optimal_bound(costs, n).eta_star


def _bounds(config: RunConfig, trace: Trace, n: int, regret: float) -> tuple[list, dict]:
    """Bound lines for oblivious runs, the mode's headline bound first."""
    log_n = math.log(n)
    costs = trace.cost
    eta0 = float(trace.eta[0])
    extras: dict = {}
    lines = []

    def add(name, value):
        lines.append(BoundLine(name, float(value), bool(regret <= value + BOUND_TOL)))

    constant_cost = bool(np.all(costs == costs[0]))
    if config.mode in ("binary-fixed-c", "multiclass") and constant_cost:
        c = float(costs[0])
        if config.eta_policy == "tuned":
            add("multiclass" if config.mode == "multiclass" else "tuned", tuned_regret_bound(n, config.T, c))
        if eta0 <= 2.0 * (1.0 - 2.0 * c):
            add("fixed-rate", log_n / eta0)
        add("hoeffding", log_n / eta0 + float(trace.eta.sum()) / 8.0)
    elif config.mode in ("binary-fixed-c", "multiclass", "binary-changing-c"):
        add("changing-cost", ad.fixed_rate_bound(eta0, costs, n))
        add("hoeffding", log_n / eta0 + float(trace.eta.sum()) / 8.0)
    elif config.mode == "adaptive":
        add("adaptive", ad.adaptive_regret_bound(costs, n))
        d = trace.d
        extras["final_d"] = int(d[-1])
    if n >= 2 and config.mode in ("binary-changing-c", "adaptive"):
        opt = ad.optimal_bound(costs, n)
        extras["r_star"] = opt.r_star
        extras["eta_star"] = opt.eta_star
    extras["eta_first"] = eta0
    return lines, extras


def _sampled(config: RunConfig, trace: Trace) -> tuple[dict, list]:
    """Realized losses of ``config.runs`` independent decision sequences."""
    totals = []
    wrong = (trace.k_star != trace.outcomes).astype(float)
    best = int(trace.expert_totals.min())
    for m in range(config.runs):
        u = stream(config.seed, 3, m).random(trace.T)
        totals.append(float(np.where(u < trace.alpha, trace.cost, wrong).sum()))
    mean = float(np.mean(totals))
    return (
        {"runs": config.runs, "mean_learner_loss": mean, "mean_regret": mean - best,
         "halfwidth": hoeffding_halfwidth(trace.T, config.runs), "confidence": CONFIDENCE},
        [(t, best) for t in totals],
    )


def _littlestone(config: RunConfig):
    cls = read_class(config.class_file) if config.class_file else HypothesisClass.all_functions(config.domain)
    rng = stream(config.seed, 0)
    xs = rng.integers(0, cls.m, size=config.T)
    h = int(rng.integers(cls.size))
    ys = cls.table[h, xs].astype(np.int64)
    if config.env == "iid":
        ys = np.where(rng.random(config.T) < config.rates[0], 1 - ys, ys)
    cover = expert_cover(cls, config.T)
    advice = cover.predictions(xs).T
    env = ObliviousEnvironment(advice, ys, config.c)
    h_losses = (cls.table[:, xs] != ys[None, :]).sum(axis=1)
    extras = {
        "littlestone_dim": cover.L,
        "cover_size": len(cover),
        "class_size": cls.size,
        "labelling_hypothesis": h,
        "best_hypothesis_loss": int(h_losses.min()),
    }
    return env, int(h_losses.min()), extras


def run(config: RunConfig) -> RegretReport:
    """Play one configured run and check every applicable bound."""
    if config.env == "adversary":
        return _run_adversary(config)
    best_override = None
    extras: dict = {}
    if config.mode == "littlestone":
        env, best_override, extras = _littlestone(config)
    else:
        env = _environment(config)
    n = env.N
    if config.mode == "adaptive":
        trace = ad.adaptive_exact_run(env.advice, env.outcomes, env.costs)
    else:
        eta = _fixed_eta(config, n, env.costs)
        if config.mode == "multiclass":
            trace = multiclass_exact_run(env.advice, env.outcomes, config.k, env.costs, eta)
        else:
            trace = exact_run(env.advice, env.outcomes, env.costs, eta)
    learner = trace.learner_loss
    totals = trace.expert_totals
    best = int(np.argmin(totals))
    regret = learner - (float(totals[best]) if best_override is None else float(best_override))
    if config.mode == "littlestone":
        c = float(env.costs[0])
        L = extras["littlestone_dim"]
        lines = [BoundLine("cover", cover_regret_bound(L, config.T, c),
                           bool(regret <= cover_regret_bound(L, config.T, c) + BOUND_TOL))]
        extras["eta_first"] = float(trace.eta[0])
    else:
        lines, more = _bounds(config, trace, n, regret)
        extras.update(more)
    sampled, rows = _sampled(config, trace) if config.expectation == "sampled" else (None, None)
    decisions = trace.sample_decisions(stream(config.seed, 2))
    return RegretReport(config, learner, totals.tolist(), best, regret, lines, sampled, extras,
                        trace, env, decisions, rows)


def _run_adversary(config: RunConfig) -> RegretReport:
    """Sampled runs against the reactive opposite-label adversary."""
    c, T = config.c, config.T
    eta = config.eta if config.eta_policy == "explicit" else tuned_eta(2, T, c)
    if config.eta_policy == "tsybakov":
        eta = ad.tsybakov_eta(2, T, config.alpha)
    rngs = [stream(config.seed, 3, m) for m in range(config.runs)]
    results = play_randomized(c, T, eta, rngs, sees_decision=config.adversary == "decision")
    losses = np.array([r.learner_loss for r in results])
    bests = np.array([r.expert_totals.min() for r in results])
    regrets = losses - bests
    mean_loss = float(losses.mean())
    mean_regret = float(regrets.mean())
    halfwidth = hoeffding_halfwidth(T, config.runs)
    lines = []
    if eta <= 2.0 * (1.0 - 2.0 * c) and c < 0.5:
        value = math.log(2) / eta
        lines.append(BoundLine("fixed-rate", value, bool(mean_regret <= value + halfwidth)))
    value = math.log(2) / eta + eta * T / 8.0
    lines.append(BoundLine("hoeffding", value, bool(mean_regret <= value + halfwidth)))
    totals = np.mean([r.expert_totals for r in results], axis=0)
    return RegretReport(
        config,
        mean_loss,
        [float(v) for v in totals],
        int(np.argmin(totals)),
        mean_regret,
        lines,
        {"runs": config.runs, "mean_learner_loss": mean_loss, "mean_regret": mean_regret,
         "halfwidth": halfwidth, "confidence": CONFIDENCE},
        {"eta_first": eta, "adversary_sees": config.adversary,
         "mean_abstentions": float(np.mean([r.abstentions for r in results]))},
        run_rows=[(float(a), int(b)) for a, b in zip(losses, bests)],
    )


# Sweeps

SWEEP_AXES = {"T": int, "alpha": float, "c": float, "n": int, "beta": float}


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    regrets: tuple
    bounds: tuple
    all_passed: bool
    slope: float | None

    def to_csv(self) -> str:
        lines = ["axis,regret,bound"]
        lines += [f"{v!r},{r!r},{b!r}" for v, r, b in zip(self.values, self.regrets, self.bounds)]
        return "\n".join(lines) + "\n"


def _sweep_point(config: RunConfig):
    rep = run(config)
    head = rep.bounds[0]
    return rep.regret, head.value, rep.all_passed


def sweep(base: RunConfig, axis: str, values, repeats: int = 1, workers: int = 1) -> SweepResult:
    """Run ``base`` at each value of ``axis``, averaging ``repeats`` seeds per point.

    Repeat ``j`` uses the same derived seed at every axis value, so points
    differ only through the swept parameter.  For a T-sweep the slope of
    log regret against log T is fitted by least squares.
    """
    if axis not in SWEEP_AXES:
        raise SweepError(f"cannot sweep {axis!r}; choose from {sorted(SWEEP_AXES)}")
    values = tuple(SWEEP_AXES[axis](v) for v in values)
    if len(set(values)) < 4:
        raise SweepError(f"a sweep needs at least 4 distinct values, got {len(set(values))}")
    if repeats < 1:
        raise SweepError("repeats must be positive")
    configs = [
        dataclasses.replace(base, **{axis: v, "seed": derive_seed(base.seed, j)})
        for v in values for j in range(repeats)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            points = list(pool.map(_sweep_point, configs))
    else:
        points = [_sweep_point(c) for c in configs]
    pts = np.array([(r, b) for r, b, _ in points]).reshape(len(values), repeats, 2)
    regrets = pts[:, :, 0].mean(axis=1)
    bounds = pts[:, :, 1].mean(axis=1)
    slope = None
    if axis == "T":
        slope = loglog_slope(values, regrets)
    return SweepResult(axis, values, tuple(map(float, regrets)), tuple(map(float, bounds)),
                       all(p for _, _, p in points), slope)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``; NaN if any ``y <= 0``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# Lower-bound demonstration

@dataclass(frozen=True)
class LowerBoundReport:
    c: float
    T: int
    eta: float
    threshold: float
    deterministic: dict
    randomized: dict

    @property
    def all_passed(self) -> bool:
        return all(v["passed"] for v in self.deterministic.values()) and all(
            v["passed"] for v in self.randomized.values()
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {"all_passed": self.all_passed}

    def summary(self) -> str:
        lines = [f"c={self.c} T={self.T}: deterministic learners need regret >= cT/2 - 1 = {self.threshold - 1:.1f}"]
        for name, v in self.deterministic.items():
            lines.append(f"  {'PASS' if v['passed'] else 'FAIL'}  {name:<15} regret {v['regret']:.1f}")
        for name, v in self.randomized.items():
            lines.append(f"  {'PASS' if v['passed'] else 'FAIL'}  randomized vs {name}-aware adversary: "
                         f"mean regret {v['mean_regret']:.3f} (limit {v['limit']:.3f}, {v['runs']} runs)")
        return "\n".join(lines)


def demo_lower_bound(c: float, T: int, seed: int = 0, runs: int = 200) -> LowerBoundReport:
    """Deterministic learners against the opposite-label adversary, then the randomized forecaster.

    Each deterministic learner should lose at least ``cT/2 - 1``.  The
    randomized forecaster runs twice: against an adversary that sees the
    sampled decision, and against one that only sees the policy.  Both are
    held to ``ln 2 / (2(1-2c)) + 4 sqrt(T / runs)``.
    """
    if not 0.0 < c <= 0.5:
        raise ValueError(f"c must lie in (0, 1/2], got {c}")
    eta = tuned_eta(2, T, c)
    threshold = c * T / 2.0
    det = {}
    for name, learner in DETERMINISTIC_LEARNERS.items():
        res = play_deterministic(learner, c, T, eta)
        det[name] = {"regret": res.regret, "abstentions": res.abstentions,
                     "passed": bool(res.regret >= threshold - 1.0)}
    fast = math.inf if c == 0.5 else math.log(2) / (2.0 * (1.0 - 2.0 * c))
    limit = fast + 4.0 * math.sqrt(T / runs)
    rnd = {}
    for name, sees in (("decision", True), ("policy", False)):
        rngs = [stream(seed, 3, m) for m in range(runs)]
        results = play_randomized(c, T, eta, rngs, sees_decision=sees)
        mean = float(np.mean([r.regret for r in results]))
        rnd[name] = {"mean_regret": mean, "limit": limit, "runs": runs, "passed": bool(mean <= limit)}
    return LowerBoundReport(c, T, eta, threshold, det, rnd)


def covered_all(cls: HypothesisClass, T: int, max_sequences: int = 100_000, seed: int = 0):
    """Coverage of the class's cover: exhaustive when small, sampled otherwise.

    Returns ``(passed, sequences_checked, exhaustive, cover)``.
    """
    cover = expert_cover(cls, T)
    if cls.m**T <= max_sequences:
        seqs, exhaustive = checks.all_sequences(cls.m, T), True
    else:
        seqs, exhaustive = stream(seed, 5).integers(0, cls.m, size=(1000, T)), False
    return all(cover.covers(xs) for xs in seqs), len(seqs), exhaustive, cover


__all__ = [
    "ConfigError",
    "LowerBoundReport",
    "RegretReport",
    "RunConfig",
    "SweepError",
    "SweepResult",
    "costs_text",
    "demo_lower_bound",
    "make_config",
    "read_config",
    "read_costs",
    "run",
    "sweep",
]
