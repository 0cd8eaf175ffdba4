"""Online packing policies: Best-Fit, plan-guided CGPP and its known-distribution variant."""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .estimator import (
    KernelEstimator, MemoryWindow, apportion, estimate_distribution, forecast_demands, kl_divergence,
)
from .model import (
    FALLBACK, FREE, PATTERN, PLAN_MATCH, PLAN_OPEN, Bin, Instance, PackingSolution, Placement, Plan,
)
from .planner import PlannerConfig, extend_plan, generate_plan

log = logging.getLogger(__name__)

POLICIES = ("bestfit", "cgpp", "cgpp-l")
ONLINE_NODE_LIMIT = 20


@dataclass(frozen=True)
class PolicyParams:
    section_length: int = 1000
    memory_length: int = 250
    theta_kl: float = 0.1
    theta_u: int = 5
    theta_o: float = 0.8
    prior: tuple[float, ...] | None = None
    # online replans cap branch and bound early; plan quality is insensitive to it
    planner: PlannerConfig = field(default_factory=lambda: PlannerConfig(ip_node_limit=ONLINE_NODE_LIMIT))

    def __post_init__(self):
        if self.section_length < 1:
            raise ValueError("section_length must be >= 1")
        if not 1 <= self.memory_length <= self.section_length:
            raise ValueError("memory_length must lie in [1, section_length]")
        if self.theta_kl <= 0 or self.theta_u <= 0 or self.theta_o <= 0:
            raise ValueError("thresholds must be positive")
        if self.prior is not None:
            object.__setattr__(self, "prior", tuple(float(x) for x in self.prior))

    def with_prior(self, prior) -> "PolicyParams":
        return replace(self, prior=tuple(float(x) for x in prior))


DEFAULT_PARAMS = PolicyParams()
LARGE_SCALE_PARAMS = PolicyParams(section_length=4000, memory_length=1000, theta_u=20, theta_o=1.5)
PROFILES = {"default": DEFAULT_PARAMS, "large": LARGE_SCALE_PARAMS}


@dataclass
class RunStats:
    bins: int = 0
    replans: int = 0
    fallback_items: int = 0
    fallback_risk: int = 0  # risk ratio w/e over threshold
    fallback_unplanned: int = 0  # no plan slot for the type
    plan_match: int = 0
    plan_open: int = 0
    planner_failures: int = 0
    replan_steps: list[int] = field(default_factory=list)
    replan_causes: list[str] = field(default_factory=list)


class PackingState:
    """Open bins plus everything CGPP carries between items."""

    def __init__(self, instance: Instance, params: PolicyParams = DEFAULT_PARAMS):
        self.instance = instance
        self.params = params
        self.sizes = instance.sizes
        self.B = instance.bin_capacity
        T = instance.n_types
        self.min_size = int(self.sizes.min()) if T else 1
        self.bins: list[Bin] = []
        self.log: list[Placement] = []
        # residual -> sorted ids of bins with that residual (only bins that still fit something)
        self._by_residual: dict[int, list[int]] = {}
        self.open_space = 0  # w: total residual of bins that can still take an item
        # type -> ids of pattern bins still expecting that type
        self._expecting: list[set[int]] = [set() for _ in range(T)]
        self._planned_left: dict[int, int] = {}
        self.plan = Plan()
        self._entries_by_type: list[list[int]] = [[] for _ in range(T)]
        self.distribution: np.ndarray | None = None
        self.mean_size = 0.0
        self.window = MemoryWindow(params.memory_length, self.sizes)
        self._kde = KernelEstimator(self.sizes)
        self.tolerance = np.zeros(T, dtype=np.int64)
        self.step = 0
        self.fallback_only = False
        self.stats = RunStats()

    # -- cursor ------------------------------------------------------------

    @property
    def section(self) -> int:
        return self.step // self.params.section_length

    @property
    def position(self) -> int:
        return self.step % self.params.section_length

    # -- bin bookkeeping -----------------------------------------------------

    def _index(self, b: Bin) -> None:
        r = b.residual_capacity
        if r >= self.min_size:
            bisect.insort(self._by_residual.setdefault(r, []), b.id)
            self.open_space += r

    def _unindex(self, b: Bin) -> None:
        r = b.residual_capacity
        if r >= self.min_size:
            ids = self._by_residual[r]
            del ids[bisect.bisect_left(ids, b.id)]
            self.open_space -= r

    def _break_pattern(self, b: Bin) -> None:
        for t in np.flatnonzero(b.pattern_residual):
            self._expecting[t].discard(b.id)
        self._planned_left.pop(b.id, None)
        b.set_free()

    def _place(self, b: Bin, t: int, cause: str) -> int:
        s = int(self.sizes[t])
        self._unindex(b)
        b.content[t] += 1
        b.residual_capacity -= s
        self._index(b)
        if b.mode == PATTERN:
            if b.pattern_residual[t] > 0:
                b.pattern_residual[t] -= 1
                self._planned_left[b.id] -= s
                if b.pattern_residual[t] == 0:
                    self._expecting[t].discard(b.id)
                if self._planned_left[b.id] == 0:
                    del self._planned_left[b.id]
            else:
                self._break_pattern(b)
        self.log.append(Placement(self.step, t, b.id, cause))
        return b.id

    def _open(self, pattern=None) -> Bin:
        b = Bin(len(self.bins), np.zeros(len(self.sizes), dtype=np.int64), self.B, FREE, opened_at=self.step)
        if pattern is not None:
            b.mode = PATTERN
            b.pattern = pattern
            b.pattern_residual = pattern.as_array()
            for t in np.flatnonzero(b.pattern_residual):
                self._expecting[t].add(b.id)
            self._planned_left[b.id] = pattern.total_size(self.sizes)
        self.bins.append(b)
        self._index(b)
        return b

    def best_fit_bin(self, t: int) -> Bin | None:
        s = int(self.sizes[t])
        for r in range(s, self.B + 1):
            ids = self._by_residual.get(r)
            if ids:
                return self.bins[ids[0]]
        return None

    # -- plan ----------------------------------------------------------------

    def set_plan(self, plan: Plan) -> None:
        self.plan = plan
        self._entries_by_type = [[] for _ in range(len(self.sizes))]
        for h, entry in enumerate(plan.entries):
            for t, c in enumerate(entry.pattern.counts):
                if c:
                    self._entries_by_type[t].append(h)
        self._entry_fill = [entry.pattern.total_size(self.sizes) for entry in plan.entries]

    def reserved(self) -> np.ndarray:
        """Per-type count of slots still awaited by open pattern bins."""
        out = np.zeros(len(self.sizes))
        for t, ids in enumerate(self._expecting):
            for bid in ids:
                out[t] += self.bins[bid].pattern_residual[t]
        return out

    def adopt(self, distribution) -> None:
        self.distribution = np.asarray(distribution, dtype=float)
        self.mean_size = float(self.distribution @ self.sizes)

    def solution(self) -> PackingSolution:
        return PackingSolution(self.bins, self.log, self.B)


# -- single steps ------------------------------------------------------------

def bestfit_step(state: PackingState, t: int, cause: str = FALLBACK) -> int:
    """Tightest bin that fits, lowest id on ties; opens a free bin otherwise."""
    b = state.best_fit_bin(t)
    if b is None:
        b = state._open()
    return state._place(b, t, cause)


def _fallback(state: PackingState, t: int) -> tuple[int, str]:
    state.stats.fallback_items += 1
    return bestfit_step(state, t), FALLBACK


def replan(state: PackingState, cause: str) -> bool:
    """Plan the rest of the current section from the adopted distribution."""
    p = state.params
    q = forecast_demands(state.distribution, p.section_length, state.position)
    # slots already reserved in open pattern bins absorb part of the forecast
    q = apportion(np.maximum(q - state.reserved(), 0.0))
    state.stats.replans += 1
    state.stats.replan_steps.append(state.step)
    state.stats.replan_causes.append(cause)
    state.tolerance[:] = 0
    try:
        plan = generate_plan(state.instance, q, p.planner)
    except Exception as exc:  # planner failure degrades to Best-Fit for the section
        log.warning("planning failed at step %d: %s", state.step, exc)
        state.stats.planner_failures += 1
        state.fallback_only = True
        state.set_plan(Plan())
        return False
    state.set_plan(extend_plan(plan, state.instance))
    return True


def maybe_replan(state: PackingState, known_distribution: bool = False) -> bool:
    """Replan trigger for the arriving item; returns whether a new plan was made.

    The arriving item must already be in the window.
    """
    p = state.params
    section_start = state.position == 0
    if section_start:
        state.fallback_only = False
    if known_distribution:
        if state.distribution is None:
            state.adopt(p.prior)
            return replan(state, "start")
        if section_start:
            return replan(state, "section")
        if state.tolerance.max(initial=0) >= p.theta_u:
            return replan(state, "tolerance")
        return False
    if state.step < p.memory_length:
        return False  # warm-up: the window is still filling
    if state.distribution is None:
        state.adopt(estimate_distribution(state.window, estimator=state._kde))
        return replan(state, "start")
    if section_start:
        state.adopt(estimate_distribution(state.window, estimator=state._kde))
        return replan(state, "section")
    if state.fallback_only:
        return False
    current = estimate_distribution(state.window, estimator=state._kde)
    if kl_divergence(current, state.distribution) >= p.theta_kl:
        state.adopt(current)
        return replan(state, "kl")
    if state.tolerance.max(initial=0) >= p.theta_u:
        state.adopt(current)
        return replan(state, "tolerance")
    return False


def cgpp_step(state: PackingState, t: int) -> tuple[int, str]:
    """Place one item following the plan, or fall back to Best-Fit."""
    p = state.params
    if state.distribution is None or state.fallback_only:
        return _fallback(state, t)
    expected = (p.section_length - state.position) * state.mean_size
    if expected <= 0 or state.open_space / expected >= p.theta_o:
        state.stats.fallback_risk += 1
        return _fallback(state, t)
    waiting = state._expecting[t]
    if waiting:
        bid = min(waiting, key=lambda b: (state._planned_left[b], b))
        state.stats.plan_match += 1
        return state._place(state.bins[bid], t, PLAN_MATCH), PLAN_MATCH
    best = None
    for h in state._entries_by_type[t]:
        entry = state.plan.entries[h]
        if entry.remaining > 0:
            key = (-entry.remaining, -state._entry_fill[h], h)
            if best is None or key < best[0]:
                best = (key, h)
    if best is not None:
        entry = state.plan.entries[best[1]]
        entry.remaining -= 1
        b = state._open(entry.pattern)
        state.stats.plan_open += 1
        return state._place(b, t, PLAN_OPEN), PLAN_OPEN
    state.tolerance[t] += 1
    state.stats.fallback_unplanned += 1
    return _fallback(state, t)


# -- full runs ----------------------------------------------------------------

def run_policy(policy: str, instance: Instance, params: PolicyParams = DEFAULT_PARAMS) -> tuple[PackingSolution, RunStats]:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if policy == "cgpp-l":
        if params.prior is None:
            raise ValueError("cgpp-l needs params.prior")
        if len(params.prior) != instance.n_types:
            raise ValueError("prior length does not match the type table")
    state = PackingState(instance, params)
    for t in instance.sequence.tolist():
        if policy == "bestfit":
            bestfit_step(state, t)
        else:
            if policy == "cgpp":
                state.window.push(t)
            maybe_replan(state, known_distribution=policy == "cgpp-l")
            cgpp_step(state, t)
        state.step += 1
    state.stats.bins = len(state.bins)
    return state.solution(), state.stats
