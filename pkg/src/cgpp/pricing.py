"""Pattern generation: unbounded integer knapsack over dual prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, Pattern


@dataclass(frozen=True)
class PricingResult:
    pattern: Pattern
    value: float

    @property
    def reduced_cost(self) -> float:
        return 1.0 - self.value

    @property
    def is_sentinel(self) -> bool:
        """All-zero pattern: nothing worth packing at these prices."""
        return self.pattern.is_empty()


def knapsack_table(duals: np.ndarray, sizes: np.ndarray, capacity: int) -> np.ndarray:
    """``dp[c]`` = best total price of a multiset of types with total size <= c."""
    dp = np.zeros(capacity + 1)
    order = np.argsort(sizes, kind="stable")
    s_sorted = sizes[order]
    d_sorted = duals[order]
    for c in range(1, capacity + 1):
        k = np.searchsorted(s_sorted, c, side="right")
        best = dp[c - 1]
        if k:
            cand = dp[c - s_sorted[:k]] + d_sorted[:k]
            best = max(best, cand.max())
        dp[c] = best
    return dp


def capped_knapsack(duals: np.ndarray, sizes: np.ndarray, capacity: int, caps: np.ndarray) -> list[int]:
    """Bounded knapsack, at most ``caps[t]`` copies of type ``t``; returns counts.

    Types are processed in id order and the lowest count reaching the
    optimum is kept, so results are deterministic.
    """
    T = len(sizes)
    dp = np.zeros(capacity + 1)
    choice = np.zeros((T, capacity + 1), dtype=np.int64)
    for t in range(T):
        s = int(sizes[t])
        kmax = min(int(caps[t]), capacity // s)
        if kmax <= 0 or duals[t] <= 0:
            continue
        best = dp.copy()
        pick = np.zeros(capacity + 1, dtype=np.int64)
        for k in range(1, kmax + 1):
            cand = np.full(capacity + 1, -np.inf)
            cand[k * s:] = dp[:capacity + 1 - k * s] + k * duals[t]
            better = cand > best
            best = np.where(better, cand, best)
            pick = np.where(better, k, pick)
        dp = best
        choice[t] = pick
    counts = [0] * T
    c = capacity
    for t in range(T - 1, -1, -1):
        k = int(choice[t, c])
        counts[t] = k
        c -= k * int(sizes[t])
    return counts


def solve_pricing(duals, instance: Instance, caps=None) -> PricingResult:
    """Most valuable feasible pattern at the given prices.

    With ``caps`` the knapsack is bounded per type; the default is the
    plain unbounded problem.
    """
    duals = np.asarray(duals, dtype=float)
    sizes = instance.sizes
    if np.any(duals < 0):
        raise ValueError("dual prices must be non-negative")
    B = instance.bin_capacity
    if caps is not None:
        counts = capped_knapsack(duals, sizes, B, np.asarray(caps))
        return PricingResult(Pattern(tuple(counts)), float(np.dot(counts, duals)))
    dp = knapsack_table(duals, sizes, B)
    counts = [0] * len(sizes)
    c = B
    priced = [t for t in range(len(sizes)) if duals[t] > 0]
    while c > 0 and dp[c] > 0:
        # lowest type id whose addition reproduces dp[c] exactly
        for t in priced:
            s = sizes[t]
            if s <= c and dp[c - s] + duals[t] == dp[c]:
                counts[t] += 1
                c -= s
                break
        else:
            c -= 1
    pattern = Pattern(tuple(counts))
    return PricingResult(pattern, float(np.dot(counts, duals)))
