"""Experiment runner and packing analytics.

An experiment is a YAML file::

    out: results/uniform_b          # output directory (``--out`` overrides)
    profile: default                # or "large"
    params: {theta_o: 0.8}          # PolicyParams overrides
    policies: [bestfit, cgpp, cgpp-l, offline]
    instances:
      - preset: Uniform-B           # or  spec: path.yaml  |  file: instance.txt
        n_items: 20000
        seeds: [1, 2, 3, 4, 5]      # or  n_instances: 5  (+ optional seed: base)

Three CSV files are written: ``runs.csv`` (one row per instance and policy),
``summary.csv`` (mean gap and 95% t-interval per set and policy) and
``timings.csv`` (wall-clock milliseconds).  Runtimes live in their own file
so the first two stay byte-identical across reruns.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from scipy import stats

from .bounds import l2_lower_bound
from .generators import DistributionSpec, load_preset, load_spec, sample_instance, type_pmf
from .model import Instance, PackingSolution, Pattern, fill_rate, read_instance
from .planner import PlannerConfig, solve_offline
from .policies import POLICIES, PROFILES, PolicyParams, run_policy

BENCH_POLICIES = POLICIES + ("offline",)

RUN_FIELDS = ["set", "instance", "seed", "policy", "n_items", "bins", "l2", "gap", "replans", "fallback_items", "error"]
SUMMARY_FIELDS = ["set", "policy", "runs", "mean_gap", "ci95"]
TIMING_FIELDS = ["set", "instance", "policy", "runtime_ms"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSet:
    """One source of instances: a preset, a spec file, or a fixed instance file."""
    source: str
    kind: str  # "preset" | "spec" | "file"
    n_items: int = 0
    seeds: tuple[int, ...] = ()
    bin_capacity: int | None = None

    @property
    def name(self) -> str:
        return Path(self.source).stem if self.kind != "preset" else self.source

    def instance_ids(self) -> list[tuple[str, int | None]]:
        if self.kind == "file":
            return [(self.name, None)]
        return [(f"{self.name}-s{s}", s) for s in self.seeds]


@dataclass(frozen=True)
class ExperimentConfig:
    sets: tuple[InstanceSet, ...]
    policies: tuple[str, ...] = ("bestfit", "cgpp")
    params: PolicyParams = field(default_factory=PolicyParams)
    out: str = "results"

    def __post_init__(self):
        for p in self.policies:
            if p not in BENCH_POLICIES:
                raise ConfigError(f"unknown policy {p!r}; expected one of {BENCH_POLICIES}")
        for s in self.sets:
            if len(set(s.seeds)) != len(s.seeds):
                raise ConfigError(f"seeds of {s.source} are not distinct")


_PARAM_KEYS = {f.name for f in fields(PolicyParams)} - {"prior", "planner"}
_PLANNER_KEYS = {f.name for f in fields(PlannerConfig)}


def params_from_dict(d: dict | None, profile: str = "default") -> PolicyParams:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}")
    base = PROFILES[profile]
    d = dict(d or {})
    planner = d.pop("planner", None) or {}
    unknown = (set(d) - _PARAM_KEYS) | (set(planner) - _PLANNER_KEYS)
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    out = replace(base, **d)
    if planner:
        out = replace(out, planner=replace(out.planner, **planner))
    return out


def _set_from_dict(d: dict) -> InstanceSet:
    kinds = [k for k in ("preset", "spec", "file") if k in d]
    if len(kinds) != 1:
        raise ConfigError("each instance set needs exactly one of preset/spec/file")
    kind = kinds[0]
    if kind == "file":
        return InstanceSet(str(d["file"]), "file")
    if "seeds" in d:
        seeds = tuple(int(s) for s in d["seeds"])
    else:
        n = int(d.get("n_instances", 1))
        base = int(d.get("seed", 1))
        seeds = tuple(range(base, base + n))
    n_items = int(d.get("n_items", 0))
    if n_items < 0:
        raise ConfigError("n_items must be non-negative")
    cap = d.get("bin_capacity")
    return InstanceSet(str(d[kind]), kind, n_items, seeds, None if cap is None else int(cap))


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("experiment config must be a mapping")
    sets = tuple(_set_from_dict(x) for x in d.get("instances") or [])
    policies = tuple(d.get("policies", ("bestfit", "cgpp")))
    params = params_from_dict(d.get("params"), d.get("profile", "default"))
    return ExperimentConfig(sets, policies, params, str(d.get("out", "results")))


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh) or {})


# -- single runs ---------------------------------------------------------------

def _source(s: InstanceSet) -> tuple[DistributionSpec | None, int | None]:
    if s.kind == "preset":
        spec, cap = load_preset(s.source)
    elif s.kind == "spec":
        spec, cap = load_spec(s.source)
    else:
        return None, None
    return spec, s.bin_capacity or cap or 100


def build_instance(s: InstanceSet, seed: int | None) -> tuple[Instance, DistributionSpec | None]:
    spec, cap = _source(s)
    if spec is None:
        return read_instance(s.source), None
    return sample_instance(spec, cap, s.n_items, seed, name=s.name), spec


def known_prior(instance: Instance, spec: DistributionSpec | None) -> np.ndarray:
    """Distribution handed to cgpp-l: the generating pmf when known, else the empirical one."""
    if spec is None:
        return instance.empirical_distribution()
    return type_pmf(spec, instance)


def run_one(policy: str, instance: Instance, params: PolicyParams,
            spec: DistributionSpec | None = None) -> tuple[PackingSolution, int, int]:
    """Solution, replans and fallback items for one policy on one instance."""
    if policy == "offline":
        solution, _ = solve_offline(instance, params.planner)
        return solution, 0, 0
    if policy == "cgpp-l":
        params = params.with_prior(known_prior(instance, spec))
    solution, st = run_policy(policy, instance, params)
    return solution, st.replans, st.fallback_items


def _task(args) -> tuple[dict, dict]:
    s, inst_id, seed, policy, params = args
    row: dict[str, Any] = {"set": s.name, "instance": inst_id, "seed": "" if seed is None else seed,
                           "policy": policy, "n_items": "", "bins": "", "l2": "", "gap": "",
                           "replans": "", "fallback_items": "", "error": ""}
    t0 = time.perf_counter()
    try:
        instance, spec = build_instance(s, seed)
        solution, replans, fallbacks = run_one(policy, instance, params, spec)
        l2 = l2_lower_bound(instance)
        gap = solution.n_bins - l2
        if gap < 0:
            raise AssertionError(f"{solution.n_bins} bins beat the L2 bound {l2}")
        row.update(n_items=instance.n_items, bins=solution.n_bins, l2=l2, gap=gap,
                   replans=replans, fallback_items=fallbacks)
    except Exception as exc:  # recorded, never aborts the batch
        row["error"] = f"{type(exc).__name__}: {exc}"
    ms = int(round((time.perf_counter() - t0) * 1000))
    return row, {"set": s.name, "instance": inst_id, "policy": policy, "runtime_ms": ms}


# -- experiment ----------------------------------------------------------------

@dataclass
class RunReport:
    runs: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    timings: list[dict] = field(default_factory=list)

    @property
    def n_errors(self) -> int:
        return sum(1 for r in self.runs if r["error"])


def mean_ci(values, level: float = 0.95) -> tuple[float, float]:
    """Mean and half-width of the two-sided t interval (0 for fewer than two values)."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return math.nan, math.nan
    mean = float(x.mean())
    if len(x) < 2:
        return mean, 0.0
    half = stats.t.ppf(0.5 + level / 2, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x))
    return mean, float(half)


def summarize(runs: list[dict]) -> list[dict]:
    groups: dict[tuple[str, str], list[int]] = {}
    for r in runs:
        key = (r["set"], r["policy"])
        groups.setdefault(key, [])
        if not r["error"]:
            groups[key].append(r["gap"])
    out = []
    for (name, policy), gaps in groups.items():
        mean, half = mean_ci(gaps)
        out.append({"set": name, "policy": policy, "runs": len(gaps),
                    "mean_gap": f"{mean:.4f}", "ci95": f"{half:.4f}"})
    return out


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> RunReport:
    tasks = [(s, inst_id, seed, policy, config.params)
             for s in config.sets
             for inst_id, seed in s.instance_ids()
             for policy in config.policies]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, tasks))  # map keeps config order
    else:
        results = [_task(t) for t in tasks]
    runs = [r for r, _ in results]
    return RunReport(runs, summarize(runs), [t for _, t in results])


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_report(report: RunReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "runs.csv", RUN_FIELDS, report.runs)
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, report.summary)
    _write_csv(out / "timings.csv", TIMING_FIELDS, report.timings)
    return out


# -- analytics -----------------------------------------------------------------

def fill_rate_series(solution: PackingSolution, instance: Instance) -> list[tuple[int, int, float, str]]:
    """(bin index in opening order, opening step, fill rate, final mode) per bin."""
    bins = sorted(solution.bins, key=lambda b: (b.opened_at, b.id))
    return [(i, b.opened_at, fill_rate(b.content, instance), b.mode) for i, b in enumerate(bins)]


def pattern_histogram(solution: PackingSolution, instance: Instance) -> list[tuple[Pattern, int, float]]:
    """Realized bin contents merged into (pattern, count, fill rate), by ascending fill rate."""
    hist: dict[Pattern, int] = {}
    for b in solution.bins:
        p = Pattern(tuple(int(c) for c in b.content))
        hist[p] = hist.get(p, 0) + 1
    rows = [(p, n, fill_rate(p, instance)) for p, n in hist.items()]
    rows.sort(key=lambda r: (r[2], tuple(-c for c in r[0].counts)))
    return rows


def histogram_overlap(a, b) -> float:
    """Sum over patterns of min(count_a, count_b), divided by the bins in ``a``."""
    ca = {p: n for p, n, *_ in a} if not isinstance(a, dict) else a
    cb = {p: n for p, n, *_ in b} if not isinstance(b, dict) else b
    total = sum(ca.values())
    if total == 0:
        return 0.0
    return sum(min(n, cb.get(p, 0)) for p, n in ca.items()) / total


def write_fill_rates(rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "opened_at", "fill_rate", "mode"])
        for i, step, rate, mode in rows:
            w.writerow([i, step, f"{rate:.6f}", mode])


def write_histogram(rows, instance: Instance, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern", "count", "fill_rate"])
        for p, n, rate in rows:
            w.writerow([p.label(instance.sizes), n, f"{rate:.6f}"])
