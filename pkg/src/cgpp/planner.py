"""Column generation planning and integer plan extraction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import DualFormSimplex, LpError, LpResult, RmpLp, default_tolerance, solve_rmp_lp
from .model import (
    PATTERN, PLAN_MATCH, PLAN_OPEN, Bin, Instance, PackingSolution, Pattern, Placement, Plan,
)
from .pricing import solve_pricing

log = logging.getLogger(__name__)


class PlannerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    max_colgen_iters: int = 1000
    ip_node_limit: int = 200
    lp_tolerance: float = 1e-7
    # price-and-dive runs only when the LP bound is at most this many bins
    dive_max_bins: int = 64

    def __post_init__(self):
        if self.max_colgen_iters < 1 or self.ip_node_limit < 0 or self.lp_tolerance <= 0:
            raise ValueError("planner limits must be positive")
        if self.dive_max_bins < 0:
            raise ValueError("dive_max_bins must be non-negative")


@dataclass
class ColumnGenerationResult:
    patterns: list[Pattern]
    lp: LpResult
    objectives: list[float] = field(default_factory=list)
    iterations: int = 0
    capped: bool = False


def initial_patterns(instance: Instance, demands, caps=None) -> list[Pattern]:
    demands = np.asarray(demands, dtype=float)
    B = instance.bin_capacity
    out = []
    for t, size in enumerate(instance.sizes):
        if demands[t] > 0:
            counts = [0] * instance.n_types
            counts[t] = B // int(size)
            if caps is not None:
                counts[t] = min(counts[t], int(caps[t]))
            out.append(Pattern(tuple(counts)))
    return out


def column_generation(instance: Instance, demands, config: PlannerConfig = PlannerConfig(),
                      extra: list[Pattern] | None = None, caps=None) -> ColumnGenerationResult:
    """Price new patterns until none has negative reduced cost.

    ``extra`` patterns join the initial singleton set (duplicates dropped);
    ``caps`` bounds per-type counts of every generated pattern.
    """
    demands = np.asarray(demands, dtype=float)
    patterns = initial_patterns(instance, demands, caps)
    seen = set(patterns)
    for p in extra or ():
        if p not in seen:
            patterns.append(p)
            seen.add(p)
    lp = None
    objectives = []
    capped = False
    it = 0
    while True:
        matrix = np.array([p.counts for p in patterns], dtype=float).reshape(len(patterns), instance.n_types)
        lp = solve_rmp_lp(RmpLp(matrix, demands), warm_start=lp)
        objectives.append(lp.objective)
        priced = solve_pricing(lp.duals, instance, caps=caps)
        if priced.reduced_cost >= -config.lp_tolerance or priced.is_sentinel:
            break
        if priced.pattern in seen:
            log.debug("pricing returned a known pattern; stopping")
            break
        if it >= config.max_colgen_iters:
            capped = True
            break
        patterns.append(priced.pattern)
        seen.add(priced.pattern)
        it += 1
    return ColumnGenerationResult(patterns, lp, objectives, it, capped)


# -- integer plan ----------------------------------------------------------

def _coverage_ok(A: np.ndarray, z: np.ndarray, q: np.ndarray, eps: float = 1e-9) -> bool:
    return bool(np.all(A.T @ z >= q - eps))


def _polish(A: np.ndarray, z: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Drop single uses of patterns while coverage still holds."""
    z = z.copy()
    cover = A.T @ z
    for h in np.argsort(-(A.sum(axis=1)), kind="stable")[::-1]:
        while z[h] > 0 and np.all(cover - A[h] >= q - 1e-9):
            z[h] -= 1
            cover -= A[h]
    return z


def solve_integer_plan(patterns: list[Pattern], demands, config: PlannerConfig = PlannerConfig(),
                       root: LpResult | None = None) -> np.ndarray:
    """Integer quotas covering ``demands`` with the fewest bins.

    Depth-first branch and bound on the most fractional quota (ceiling
    child first), LP bounds for pruning.  Branching bounds enter the LP as
    extra rows ``z_h >= l`` / ``-z_h >= -u`` of the master, i.e. extra
    variables of the dual form, so every child warm-starts from its parent.
    """
    q = np.asarray(demands, dtype=float)
    A = np.array([p.counts for p in patterns], dtype=float).reshape(len(patterns), len(q))
    H = len(patterns)
    if H == 0:
        if np.any(q > 0):
            raise PlannerError("no patterns for a positive demand")
        return np.zeros(0, dtype=np.int64)
    if root is None or root.solver is None or root.solver.m != H:
        root = solve_rmp_lp(RmpLp(A, q))
    z_lp = root.primal
    eps = 1e-6

    def integral(z):
        return np.all(np.abs(z - np.round(z)) <= eps)

    incumbent = _polish(A, np.ceil(z_lp - eps).astype(np.int64), q)
    best = int(incumbent.sum())
    if integral(z_lp):
        cand = np.round(z_lp).astype(np.int64)
        if _coverage_ok(A, cand, q):
            return cand
    lower = math.ceil(root.objective - eps)
    if best <= lower:
        return incumbent

    tol = default_tolerance(q)
    # stack of (solver-with-parent-basis, new bound column, cost)
    stack = [(root.solver, None, None)]
    nodes = 0
    while stack and nodes < config.ip_node_limit:
        parent, col, cost = stack.pop()
        nodes += 1
        solver = parent.copy()
        solver.tol = tol
        if col is not None:
            solver.add_columns(col, [cost])
        try:
            solver.solve()
        except LpError:
            continue
        obj = solver.objective()
        if math.ceil(obj - eps) >= best:
            continue
        z = solver.multipliers()
        frac = np.abs(z - np.round(z))
        if np.all(frac <= eps):
            cand = np.round(z).astype(np.int64)
            if _coverage_ok(A, cand, q) and cand.sum() < best:
                incumbent, best = cand, int(cand.sum())
                if best <= lower:
                    break
            continue
        # also try rounding this node up as a cheap incumbent
        cand = _polish(A, np.ceil(z - eps).astype(np.int64), q)
        if cand.sum() < best:
            incumbent, best = cand, int(cand.sum())
            if best <= lower:
                break
        dist = np.abs(z - np.floor(z) - 0.5)
        h = int(np.argmin(np.where(frac > eps, dist, np.inf)))
        m = solver.m
        up = np.zeros((m, 1))
        up[h] = 1.0  # z_h >= ceil
        down = np.zeros((m, 1))
        down[h] = -1.0  # -z_h >= -floor
        # ceiling child explored first, so push it last
        stack.append((solver, down, -math.floor(z[h])))
        stack.append((solver, up, float(math.ceil(z[h]))))
    return incumbent


def generate_plan(instance: Instance, demands, config: PlannerConfig = PlannerConfig()) -> Plan:
    demands = np.asarray(demands, dtype=float)
    if np.any(demands < 0):
        raise ValueError("demands must be non-negative")
    if not np.any(demands > 0):
        return Plan()
    cg = column_generation(instance, demands, config)
    quotas = solve_integer_plan(cg.patterns, demands, config, root=cg.lp)
    patterns = cg.patterns
    bound = math.ceil(cg.lp.objective - 1e-6)
    if quotas.sum() > bound and cg.lp.objective <= config.dive_max_bins:
        dive_patterns, dive_quotas = price_and_dive(instance, demands, config, pool=cg.patterns)
        if dive_quotas.sum() < quotas.sum():
            patterns, quotas = dive_patterns, dive_quotas
    plan = Plan.from_quotas(patterns, quotas, flagged=cg.capped)
    plan.lp_objective = cg.lp.objective
    plan.duals = cg.lp.duals
    if cg.capped:
        log.warning("column generation hit max_colgen_iters=%d", config.max_colgen_iters)
    return plan


def maximal_pattern(pattern: Pattern, instance: Instance) -> Pattern:
    """Fill a pattern's spare capacity greedily, largest type first (lowest id on ties)."""
    sizes = instance.sizes
    counts = np.array(pattern.counts, dtype=np.int64)
    slack = instance.bin_capacity - int(counts @ sizes)
    for t in sorted(range(len(sizes)), key=lambda t: (-int(sizes[t]), t)):
        k = slack // int(sizes[t])
        if k > 0:
            counts[t] += k
            slack -= k * int(sizes[t])
    return Pattern(tuple(int(c) for c in counts))


def extend_plan(plan: Plan, instance: Instance) -> Plan:
    """Same quotas over maximal patterns, so no planned bin keeps idle capacity."""
    out = Plan.from_quotas([maximal_pattern(e.pattern, instance) for e in plan.entries],
                           [e.quota for e in plan.entries], flagged=plan.flagged)
    out.lp_objective = plan.lp_objective
    out.duals = plan.duals
    return out


def price_and_dive(instance: Instance, demands, config: PlannerConfig = PlannerConfig(),
                   pool: list[Pattern] | None = None) -> tuple[list[Pattern], np.ndarray]:
    """Residual rounding heuristic with re-pricing.

    Each round prices patterns capped at the (rounded-up) residual demand,
    fixes the integer part of the LP quotas (or, when every quota is below
    one, rounds up the largest), subtracts the covered demand and repeats
    on what is left.
    """
    residual = np.asarray(demands, dtype=float).copy()
    fixed: dict[Pattern, int] = {}
    pool = list(pool or ())
    eps = 1e-6
    while np.any(residual > eps):
        caps = np.ceil(residual - eps).astype(np.int64)
        usable = [p for p in pool if np.all(np.asarray(p.counts) <= caps)]
        cg = column_generation(instance, residual, config, extra=usable, caps=caps)
        z = cg.lp.primal
        take = np.floor(z + eps).astype(np.int64)
        if not take.any():
            take[int(np.argmax(z))] = 1
        A = np.array([p.counts for p in cg.patterns], dtype=float)
        for p, k in zip(cg.patterns, take):
            if k:
                fixed[p] = fixed.get(p, 0) + int(k)
        residual = np.maximum(residual - A.T @ take, 0.0)
        residual[residual <= eps] = 0.0
        pool = cg.patterns
    patterns = list(fixed)
    quotas = np.array([fixed[p] for p in patterns], dtype=np.int64)
    if patterns:
        A = np.array([p.counts for p in patterns], dtype=float)
        quotas = _polish(A, quotas, np.asarray(demands, dtype=float))
    return patterns, quotas


# -- offline oracle --------------------------------------------------------

def materialize(plan: Plan, instance: Instance) -> PackingSolution:
    """Pack the whole sequence into the plan's bins, filling slots greedily."""
    T = instance.n_types
    slots: dict[int, list[int]] = {t: [] for t in range(T)}  # type -> bin indices with open slots
    bins: list[Bin] = []
    for entry in plan.entries:
        for _ in range(entry.quota):
            b = Bin(len(bins), np.zeros(T, dtype=np.int64), instance.bin_capacity, PATTERN,
                    entry.pattern.as_array(), entry.pattern)
            for t in range(T):
                if entry.pattern.counts[t]:
                    slots[t].append(b.id)
            bins.append(b)
    for t in slots:
        slots[t].reverse()
    log_rows = []
    for step, t in enumerate(instance.sequence.tolist()):
        while slots[t] and bins[slots[t][-1]].pattern_residual[t] == 0:
            slots[t].pop()
        if not slots[t]:
            raise PlannerError(f"plan does not cover type {t}")
        b = bins[slots[t][-1]]
        first = not b.content.any()
        if first:
            b.opened_at = step
        b.content[t] += 1
        b.pattern_residual[t] -= 1
        b.residual_capacity -= int(instance.sizes[t])
        log_rows.append(Placement(step, t, b.id, PLAN_OPEN if first else PLAN_MATCH))
    used = [b for b in bins if b.content.sum() > 0]
    used.sort(key=lambda b: (b.opened_at, b.id))
    remap = {b.id: i for i, b in enumerate(used)}
    for b in used:
        b.id = remap[b.id]
    log_rows = [Placement(p.step, p.type, remap[p.bin_id], p.cause) for p in log_rows]
    return PackingSolution(used, log_rows, instance.bin_capacity)


def pattern_usage(solution: PackingSolution, instance: Instance) -> dict[Pattern, int]:
    hist: dict[Pattern, int] = {}
    for b in solution.bins:
        p = Pattern(tuple(b.content.tolist()))
        hist[p] = hist.get(p, 0) + 1
    return hist


def solve_offline(instance: Instance, config: PlannerConfig = PlannerConfig()) -> tuple[PackingSolution, dict[Pattern, int]]:
    """Plan on the exact type counts, then pack the sequence into the plan."""
    counts = instance.type_counts().astype(float)
    plan = generate_plan(instance, counts, config)
    solution = materialize(plan, instance)
    return solution, pattern_usage(solution, instance)
