"""Sliding-window kernel density estimate of the item-type distribution.

The window keeps per-type counts and running moments of item sizes, so an
add/evict costs O(1) and evaluating the estimate costs one T x T
matrix-vector product at the current bandwidth.  This gives exactly the
same numbers as summing one Gaussian kernel per buffered item.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .model import Instance

KL_EPSILON = 1e-6
MIN_BANDWIDTH = 1.0


class EmptyWindowError(ValueError):
    pass


class MemoryWindow:
    """FIFO buffer of the last ``capacity`` observed type indices."""

    def __init__(self, capacity: int, sizes: np.ndarray):
        if capacity < 1:
            raise ValueError("window capacity must be at least 1")
        self.capacity = int(capacity)
        self.sizes = np.asarray(sizes, dtype=np.int64)
        self.buffer: deque[int] = deque()
        self.counts = np.zeros(len(self.sizes), dtype=np.int64)
        self._sum = 0
        self._sumsq = 0

    def __len__(self):
        return len(self.buffer)

    def push(self, t: int) -> int | None:
        """Observe type ``t``; returns the evicted type, if any."""
        t = int(t)
        evicted = None
        if len(self.buffer) == self.capacity:
            evicted = self.buffer.popleft()
            self._remove(evicted)
        self.buffer.append(t)
        s = int(self.sizes[t])
        self.counts[t] += 1
        self._sum += s
        self._sumsq += s * s
        return evicted

    def _remove(self, t: int) -> None:
        s = int(self.sizes[t])
        self.counts[t] -= 1
        self._sum -= s
        self._sumsq -= s * s

    def clear(self) -> None:
        self.buffer.clear()
        self.counts[:] = 0
        self._sum = self._sumsq = 0

    def size_stdev(self) -> float:
        """Sample standard deviation of buffered sizes (0 for fewer than two items)."""
        n = len(self.buffer)
        if n < 2:
            return 0.0
        var = (self._sumsq - self._sum * self._sum / n) / (n - 1)
        return float(np.sqrt(max(var, 0.0)))

    @classmethod
    def from_items(cls, capacity: int, sizes, types) -> "MemoryWindow":
        w = cls(capacity, sizes)
        for t in types:
            w.push(t)
        return w


def silverman_bandwidth(window: MemoryWindow) -> float:
    n = len(window)
    if n == 0:
        raise EmptyWindowError("bandwidth of an empty window")
    h = 1.06 * window.size_stdev() * n ** (-0.2)
    return max(h, MIN_BANDWIDTH)


class KernelEstimator:
    """Evaluates the KDE at every declared type size."""

    def __init__(self, sizes: np.ndarray):
        sizes = np.asarray(sizes, dtype=float)
        self._diff2 = (sizes[:, None] - sizes[None, :]) ** 2

    def __call__(self, counts: np.ndarray, bandwidth: float) -> np.ndarray:
        kernel = np.exp(-0.5 * self._diff2 / (bandwidth * bandwidth))
        density = kernel @ counts
        total = density.sum()
        if total <= 0:
            raise EmptyWindowError("no observations in the window")
        return density / total


def estimate_distribution(window: MemoryWindow, instance: Instance | None = None,
                          bandwidth: float | None = None,
                          estimator: KernelEstimator | None = None) -> np.ndarray:
    """Type distribution from a Gaussian KDE over the window's item sizes."""
    if len(window) == 0:
        raise EmptyWindowError("cannot estimate from an empty window")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(window)
    if estimator is None:
        estimator = KernelEstimator(window.sizes if instance is None else instance.sizes)
    return estimator(window.counts.astype(float), bandwidth)


def kde_direct(item_sizes, type_sizes, bandwidth: float) -> np.ndarray:
    """Reference KDE: one kernel per item, summed at each type size."""
    item_sizes = np.asarray(item_sizes, dtype=float)
    type_sizes = np.asarray(type_sizes, dtype=float)
    dens = np.array([np.exp(-0.5 * ((s - item_sizes) / bandwidth) ** 2).sum() for s in type_sizes])
    return dens / dens.sum()


def kl_divergence(p, q, epsilon: float = KL_EPSILON) -> float:
    """KL(p || q) after adding ``epsilon`` to every entry and renormalising."""
    p = np.asarray(p, dtype=float) + epsilon
    q = np.asarray(q, dtype=float) + epsilon
    if p.shape != q.shape:
        raise ValueError("distributions must share the type index set")
    p /= p.sum()
    q /= q.sum()
    return float(max(np.sum(p * np.log(p / q)), 0.0))


def forecast_demands(distribution, section_length: int, position: int) -> np.ndarray:
    """Expected count of each type over the rest of the section."""
    if not 0 <= position <= section_length:
        raise ValueError(f"position {position} outside [0, {section_length}]")
    return np.asarray(distribution, dtype=float) * (section_length - position)


def apportion(demands) -> np.ndarray:
    """Integer counts with total ``round(sum)`` by largest remainders.

    Ties in the remainder go to the lower type index.
    """
    q = np.asarray(demands, dtype=float)
    base = np.floor(q)
    extra = int(round(q.sum() - base.sum()))
    if extra > 0:
        order = np.lexsort((np.arange(len(q)), -(q - base)))
        base[order[:extra]] += 1
    return base
