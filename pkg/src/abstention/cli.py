"""Command-line entry point: ``abstention <subcommand> ...``.

Every subcommand exits 0 iff all of its bound or property checks pass,
1 if any fails, and 2 on bad input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from . import checks
from .adaptive import TsybakovParams
from .environments import ConstructionError, tsybakov_costs, verify_tsybakov
from .harness import (
    ConfigError,
    RunConfig,
    SweepError,
    costs_text,
    demo_lower_bound,
    covered_all,
    make_config,
    read_config,
    run,
    sweep,
)
from .littlestone import HypothesisClass, cover_size_bound, ldim, read_class


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with a [run] section")
    g = p.add_argument_group("run settings (override the config file)")
    for f in dataclasses.fields(RunConfig):
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar=f.name.upper(),
                       help=f"default {f.default!r}" if not isinstance(f.default, tuple)
                       else f"comma-separated, default {','.join(map(str, f.default))}")


def _config(args) -> RunConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    if args.config:
        return read_config(args.config, overrides)
    return make_config(overrides)


def _cmd_run(args) -> int:
    report = run(_config(args))
    print(report.summary())
    if args.out:
        files = report.write(args.out)
        print(f"wrote {', '.join(files)} to {args.out}")
    return 0 if report.all_passed else 1


def _cmd_sweep(args) -> int:
    base = _config(args)
    values = [v for v in args.values.split(",") if v.strip()]
    result = sweep(base, args.axis, values, repeats=args.repeats, workers=args.workers)
    text = result.to_csv()
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if result.slope is not None:
        print(f"log-log slope of regret against T: {result.slope:.4f}" if not math.isnan(result.slope)
              else "log-log slope undefined: some mean regret is not positive")
    print("all bounds PASS" if result.all_passed else "some bound FAILED")
    return 0 if result.all_passed else 1


def _cmd_verify(args) -> int:
    if args.check_run:
        results = checks.check_run(args.check_run)
    else:
        results = checks.run_suites(args.suites, seed=args.seed, eta_scale=3.0 if args.corrupt_eta else 2.0)
    if args.json:
        print(json.dumps([r.to_dict() for r in results], sort_keys=True, indent=2))
    else:
        for r in results:
            line = f"{'PASS' if r.passed else 'FAIL'}  {r.name:<40} max violation {r.max_violation:.3e}"
            if r.witness:
                line += f"  witness {json.dumps(r.witness, sort_keys=True)}"
            print(line)
    return 0 if all(r.passed for r in results) else 1


def _cmd_demo(args) -> int:
    report = demo_lower_bound(args.c, args.T, seed=args.seed, runs=args.runs)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2) if args.json else report.summary())
    return 0 if report.all_passed else 1


def _cmd_gen_costs(args) -> int:
    params = TsybakovParams(args.alpha, args.beta)
    costs = tsybakov_costs(args.T, params, args.seed)
    text = costs_text(costs, alpha=args.alpha, beta=args.beta)
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    check = verify_tsybakov(costs, params)
    print(f"margin condition {'PASS' if check.passed else 'FAIL'} (worst excess {check.worst_excess:.3e})",
          file=sys.stderr)
    return 0 if check.passed else 1


def _cmd_cover(args) -> int:
    if args.class_file:
        cls = read_class(args.class_file)
    elif args.thresholds is not None:
        cls = HypothesisClass.thresholds(args.thresholds)
    else:
        cls = HypothesisClass.all_functions(args.all_functions)
    L = ldim(cls)
    ok, checked, exhaustive, cover = covered_all(cls, args.T, seed=args.seed)
    limit = cover_size_bound(args.T, L)
    size_ok = len(cover) <= limit and (L == 0 or len(cover) <= (math.e * args.T / L) ** L)
    print(f"class: {cls.size} hypotheses on {cls.m} points, Littlestone dimension {L}")
    print(f"cover for T={args.T}: {len(cover)} experts (limit {limit}) {'PASS' if size_ok else 'FAIL'}")
    print(f"coverage over {checked} {'(all)' if exhaustive else 'sampled'} sequences: {'PASS' if ok else 'FAIL'}")
    return 0 if ok and size_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abstention", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play one configured run and check its bounds")
    _add_config_flags(p)
    p.add_argument("--out", help="directory for report.json, trace.csv and env.csv")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="repeat a run along one axis and fit the growth of the regret")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, help="T, alpha, beta, c or n")
    p.add_argument("--values", required=True, help="comma-separated, at least 4")
    p.add_argument("--repeats", type=int, default=1, help="seeds averaged per point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run numerical property suites, or check a run directory")
    p.add_argument("suites", nargs="*", metavar="SUITE",
                   help=f"any of {', '.join(sorted(checks.SUITES))} (default all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-eta", action="store_true", help="debug: use eta = 3(1-2c) in the rate-dependent suites")
    p.add_argument("--check-run", metavar="DIR", help="recompute a run's report from its output files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("demo-lower-bound", help="deterministic vs randomized learners against the reactive adversary")
    p.add_argument("--c", type=float, default=0.3)
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("gen-costs", help="write a cost schedule satisfying the margin condition")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="path (default stdout)")
    p.set_defaults(func=_cmd_gen_costs)

    p = sub.add_parser("cover", help="build and check the expert cover of a hypothesis class")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--class", dest="class_file", metavar="FILE")
    src.add_argument("--all-functions", type=int, metavar="M")
    src.add_argument("--thresholds", type=int, metavar="M")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_cover)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SweepError, ConstructionError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc.args[0] if isinstance(exc, KeyError) else exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
