"""Lower bounds and an exact solver for small instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance

EXACT_MAX_ITEMS = 16


class SizeGuardError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    l1: int
    l2: int
    exact: int | None = None


def l1_lower_bound(instance: Instance) -> int:
    total = int(instance.item_sizes().sum())
    return -(-total // instance.bin_capacity)


def _l2_from_sizes(sizes: np.ndarray, B: int) -> int:
    if len(sizes) == 0:
        return 0
    counts = np.bincount(sizes, minlength=B + 1)
    by_size = counts * np.arange(B + 1)
    # suffix sums over sizes strictly greater than a threshold
    n_gt = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0]])  # n_gt[v] = #items > v
    s_gt = np.concatenate([np.cumsum(by_size[::-1])[::-1][1:], [0]])
    n_ge = np.cumsum(counts[::-1])[::-1]  # n_ge[v] = #items >= v
    s_ge = np.cumsum(by_size[::-1])[::-1]
    half = B // 2  # items with s > B/2 are exactly s > half
    best = 0
    for alpha in range(0, B // 2 + 1):
        j1 = n_gt[B - alpha]
        j2 = n_gt[half] - j1
        j2_size = s_gt[half] - s_gt[B - alpha]
        j3_size = s_ge[alpha] - s_gt[half]
        extra = int(j3_size - (j2 * B - j2_size))
        best = max(best, int(j1 + j2 + max(0, -(-extra // B))))
    return best


def l2_lower_bound(instance: Instance) -> int:
    """Martello and Toth's L2 bound, maximised over integer thresholds."""
    return _l2_from_sizes(instance.item_sizes(), instance.bin_capacity)


def exact_solve(instance: Instance) -> tuple[int, list[list[int]]]:
    """Optimal bin count and one optimal assignment (lists of item positions).

    Depth-first branch and bound: items in nonincreasing size order, each
    placed into an open bin or the next unused one; bins with equal residual
    are interchangeable so only one of them is tried.
    """
    N = instance.n_items
    if N > EXACT_MAX_ITEMS:
        raise SizeGuardError(f"exact_solve handles at most {EXACT_MAX_ITEMS} items, got {N}")
    if N == 0:
        return 0, []
    B = instance.bin_capacity
    sizes = instance.item_sizes()
    order = sorted(range(N), key=lambda j: (-int(sizes[j]), j))
    s = [int(sizes[j]) for j in order]
    lower = l2_lower_bound(instance)
    suffix = [0] * (N + 1)
    for i in range(N - 1, -1, -1):
        suffix[i] = suffix[i + 1] + s[i]

    # first-fit decreasing incumbent
    loads: list[int] = []
    assign = []
    for x in s:
        for b, load in enumerate(loads):
            if load + x <= B:
                loads[b] += x
                assign.append(b)
                break
        else:
            loads.append(x)
            assign.append(len(loads) - 1)
    best = [len(loads), assign[:]]

    residual: list[int] = []
    current: list[int] = []

    def search(i: int) -> bool:
        nb = len(residual)
        if i == N:
            if nb < best[0]:
                best[0], best[1] = nb, current[:]
            return best[0] <= lower
        free = sum(residual)
        need = nb + max(0, -(-(suffix[i] - free) // B))
        if max(need, nb) >= best[0]:
            return False
        x = s[i]
        tried = set()
        for b in range(nb):
            r = residual[b]
            if r >= x and r not in tried:
                tried.add(r)
                residual[b] -= x
                current.append(b)
                if search(i + 1):
                    return True
                current.pop()
                residual[b] += x
        if nb + 1 < best[0]:
            residual.append(B - x)
            current.append(nb)
            done = search(i + 1)
            current.pop()
            residual.pop()
            if done:
                return True
        return False

    if best[0] > lower:
        search(0)
    n_bins, bins_of = best
    groups: list[list[int]] = [[] for _ in range(n_bins)]
    for k, b in enumerate(bins_of):
        groups[b].append(order[k])
    return n_bins, [sorted(g) for g in groups]


def bound_report(instance: Instance, with_exact: bool | None = None) -> BoundReport:
    if with_exact is None:
        with_exact = instance.n_items <= EXACT_MAX_ITEMS
    exact = exact_solve(instance)[0] if with_exact else None
    return BoundReport(l1_lower_bound(instance), l2_lower_bound(instance), exact)
