"""Command line entry point: ``cgpp gen | run | bench | bound``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from .bench import (
    BENCH_POLICIES, ConfigError, fill_rate_series, load_config, params_from_dict, pattern_histogram,
    run_experiment, run_one, write_fill_rates, write_histogram, write_report,
)
from .bounds import bound_report
from .generators import load_preset, load_spec, preset_names, sample_instance
from .model import read_instance, write_instance

PARAM_FLAGS = {
    "section_length": int, "memory_length": int, "theta_kl": float, "theta_u": int, "theta_o": float,
}


def cmd_gen(args) -> int:
    if args.preset:
        spec, cap = load_preset(args.preset)
    else:
        spec, cap = load_spec(args.spec)
    cap = args.bin_capacity or cap or 100
    inst = sample_instance(spec, cap, args.n, args.seed)
    if args.out == "-":
        from .model import format_instance
        sys.stdout.write(format_instance(inst))
    else:
        write_instance(inst, args.out)
    return 0


def cmd_run(args) -> int:
    instance = read_instance(args.instance)
    overrides = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}
    params = params_from_dict(overrides, args.profile)
    spec = None
    if args.spec:
        spec, _ = load_spec(args.spec)
    elif args.preset:
        spec, _ = load_preset(args.preset)
    t0 = time.perf_counter()
    solution, replans, fallbacks = run_one(args.policy, instance, params, spec)
    ms = (time.perf_counter() - t0) * 1000
    l2 = bound_report(instance, with_exact=False).l2
    line = (f"policy={args.policy} bins={solution.n_bins} l2={l2} gap={solution.n_bins - l2} "
            f"replans={replans} fallback_items={fallbacks} runtime_ms={ms:.0f}")
    print(line)
    if args.report:
        Path(args.report).write_text(line + "\n", encoding="utf-8")
    if args.fillrate:
        write_fill_rates(fill_rate_series(solution, instance), args.fillrate)
    if args.histogram:
        write_histogram(pattern_histogram(solution, instance), instance, args.histogram)
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    report = run_experiment(config, jobs=args.jobs)
    out = write_report(report, args.out or config.out)
    for row in report.summary:
        print(f"{row['set']:<20} {row['policy']:<8} n={row['runs']:<3} gap={row['mean_gap']} +/- {row['ci95']}")
    for row in report.runs:
        if row["error"]:
            print(f"error: {row['instance']} {row['policy']}: {row['error']}", file=sys.stderr)
    print(f"wrote {out}")
    return 1 if report.n_errors else 0


def cmd_bound(args) -> int:
    instance = read_instance(args.instance)
    r = bound_report(instance)
    print(" ".join(str(x) for x in (r.l1, r.l2, r.exact) if x is not None))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgpp", description="Plan-guided online bin packing.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log planner warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample an instance from a preset or spec file")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=preset_names())
    src.add_argument("--spec", help="YAML distribution spec")
    g.add_argument("--n", type=int, required=True, help="number of items")
    g.add_argument("--bin-capacity", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-", help="output path ('-' for stdout)")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="pack one instance with one policy")
    r.add_argument("--policy", choices=BENCH_POLICIES, required=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--profile", choices=["default", "large"], default="default")
    for name, typ in PARAM_FLAGS.items():
        r.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    prior = r.add_mutually_exclusive_group()
    prior.add_argument("--preset", help="cgpp-l prior from this preset's pmf")
    prior.add_argument("--spec", help="cgpp-l prior from this spec file's pmf")
    r.add_argument("--report", help="write the summary line here")
    r.add_argument("--fillrate", help="CSV of per-bin fill rates")
    r.add_argument("--histogram", help="CSV of realized pattern counts")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run an experiment config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", default=None, help="output directory (overrides the config)")
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("bound", help="print L1, L2 and (small instances) the exact optimum")
    d.add_argument("--instance", required=True)
    d.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"cgpp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
