"""Domain types for one-dimensional online bin packing.

Type indices are 0-based inside Python (``instance.sequence`` holds indices
into ``instance.sizes``); the text format and :class:`ItemType` use 1-based
ids so that a file lists types ``1..T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed instances or instance files."""


@dataclass(frozen=True)
class ItemType:
    id: int
    size: int


@dataclass(frozen=True, eq=False)
class Instance:
    bin_capacity: int
    sizes: np.ndarray
    sequence: np.ndarray
    name: str = ""

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.int64)
        seq = np.asarray(self.sequence, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "sequence", seq)
        sizes.setflags(write=False)
        seq.setflags(write=False)
        B = int(self.bin_capacity)
        if B < 1:
            raise InstanceError(f"bin capacity must be positive, got {B}")
        if sizes.ndim != 1:
            raise InstanceError("sizes must be a flat vector")
        if len(sizes) and (sizes.min() < 1 or sizes.max() > B):
            raise InstanceError(f"item sizes must lie in [1, {B}]")
        if len(seq) and (seq.min() < 0 or seq.max() >= len(sizes)):
            raise InstanceError("sequence refers to an undeclared type")

    @property
    def n_types(self) -> int:
        return len(self.sizes)

    @property
    def n_items(self) -> int:
        return len(self.sequence)

    @property
    def types(self) -> list[ItemType]:
        return [ItemType(t + 1, int(s)) for t, s in enumerate(self.sizes)]

    def item_sizes(self) -> np.ndarray:
        return self.sizes[self.sequence]

    def type_counts(self) -> np.ndarray:
        return np.bincount(self.sequence, minlength=self.n_types)

    def empirical_distribution(self) -> np.ndarray:
        counts = self.type_counts().astype(float)
        total = counts.sum()
        return counts / total if total else counts

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.bin_capacity == other.bin_capacity
            and np.array_equal(self.sizes, other.sizes)
            and np.array_equal(self.sequence, other.sequence)
        )

    __hash__ = None

    @classmethod
    def from_sizes(cls, item_sizes: Iterable[int], bin_capacity: int, name: str = "") -> "Instance":
        """Build an instance whose type table is the sorted distinct sizes (largest first)."""
        item_sizes = np.asarray(list(item_sizes), dtype=np.int64)
        table = np.array(sorted(set(item_sizes.tolist()), reverse=True), dtype=np.int64)
        lookup = {int(s): t for t, s in enumerate(table)}
        seq = np.array([lookup[int(s)] for s in item_sizes], dtype=np.int64)
        return cls(bin_capacity, table, seq, name=name)


@dataclass(frozen=True)
class Pattern:
    """Per-type item counts that fit into one bin."""

    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @classmethod
    def from_dict(cls, by_size: dict[int, int], instance: Instance) -> "Pattern":
        counts = [0] * instance.n_types
        for size, c in by_size.items():
            hits = np.flatnonzero(instance.sizes == size)
            if len(hits) == 0:
                raise KeyError(f"no item type of size {size}")
            counts[int(hits[0])] += c
        return cls(tuple(counts))

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def total_size(self, sizes: np.ndarray) -> int:
        return int(np.dot(self.counts, sizes))

    def is_empty(self) -> bool:
        return not any(self.counts)

    def by_size(self, sizes: np.ndarray) -> dict[int, int]:
        return {int(sizes[t]): c for t, c in enumerate(self.counts) if c}

    def label(self, sizes: np.ndarray) -> str:
        """Canonical text form, e.g. ``"5x1 3x1 2x1"`` (largest size first)."""
        parts = sorted(((int(sizes[t]), c) for t, c in enumerate(self.counts) if c), reverse=True)
        return " ".join(f"{s}x{c}" for s, c in parts)


def validate_pattern(pattern: Pattern, instance: Instance) -> str | None:
    """Return ``None`` if the pattern is a feasible non-empty bin, else a description."""
    if len(pattern.counts) != instance.n_types:
        raise ValueError(
            f"pattern has {len(pattern.counts)} entries, instance has {instance.n_types} types"
        )
    if any(c < 0 for c in pattern.counts):
        return "negative count"
    if pattern.is_empty():
        return "empty pattern"
    total = pattern.total_size(instance.sizes)
    if total > instance.bin_capacity:
        return f"overflow: total size {total} exceeds capacity {instance.bin_capacity} by {total - instance.bin_capacity}"
    return None


def fill_rate(counts: Sequence[int] | np.ndarray | Pattern, instance: Instance) -> float:
    if isinstance(counts, Pattern):
        counts = counts.counts
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        return 0.0
    return float(np.dot(counts, instance.sizes)) / instance.bin_capacity


@dataclass
class PlanEntry:
    pattern: Pattern
    quota: int
    remaining: int


@dataclass
class Plan:
    entries: list[PlanEntry] = field(default_factory=list)
    flagged: bool = False  # planner hit its iteration cap
    lp_objective: float | None = None
    duals: np.ndarray | None = None

    @classmethod
    def from_quotas(cls, patterns: Sequence[Pattern], quotas: Sequence[int], flagged: bool = False) -> "Plan":
        merged: dict[Pattern, int] = {}
        for p, z in zip(patterns, quotas):
            z = int(z)
            if z <= 0 or p.is_empty():
                continue
            merged[p] = merged.get(p, 0) + z
        return cls([PlanEntry(p, z, z) for p, z in merged.items()], flagged=flagged)

    @property
    def total_quota(self) -> int:
        return sum(e.quota for e in self.entries)

    def __len__(self):
        return len(self.entries)


FREE = "free"
PATTERN = "pattern"

PLAN_MATCH = "plan-match"
PLAN_OPEN = "plan-open"
FALLBACK = "fallback"


@dataclass
class Bin:
    id: int
    content: np.ndarray
    residual_capacity: int
    mode: str = FREE
    pattern_residual: np.ndarray | None = None
    pattern: Pattern | None = None
    opened_at: int = 0

    def set_free(self):
        self.mode = FREE
        self.pattern_residual = None

    def item_count(self) -> int:
        return int(self.content.sum())


@dataclass(frozen=True)
class Placement:
    step: int
    type: int
    bin_id: int
    cause: str


@dataclass
class PackingSolution:
    bins: list[Bin]
    log: list[Placement]
    bin_capacity: int

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    def contents(self) -> np.ndarray:
        if not self.bins:
            return np.zeros((0, 0), dtype=np.int64)
        return np.stack([b.content for b in self.bins])


def replay(solution: PackingSolution, instance: Instance) -> np.ndarray:
    """Rebuild per-bin contents from the placement log; raises on inconsistency."""
    if len(solution.log) != instance.n_items:
        raise InstanceError("log length does not match the sequence")
    contents = np.zeros((len(solution.bins), instance.n_types), dtype=np.int64)
    for n, pl in enumerate(solution.log):
        if pl.step != n or pl.type != instance.sequence[n]:
            raise InstanceError(f"log entry {n} does not match the sequence")
        contents[pl.bin_id, pl.type] += 1
    return contents


# -- text format -----------------------------------------------------------

def format_instance(instance: Instance) -> str:
    lines = [f"{instance.bin_capacity} {instance.n_types} {instance.n_items}"]
    lines += [f"{t + 1} {int(s)}" for t, s in enumerate(instance.sizes)]
    ids = (instance.sequence + 1).tolist()
    for start in range(0, len(ids), 20):
        lines.append(" ".join(map(str, ids[start:start + 20])))
    return "\n".join(lines) + "\n"


def parse_instance(text: str, name: str = "") -> Instance:
    tokens = text.split()
    if len(tokens) < 3:
        raise InstanceError("missing header 'B T N'")
    try:
        values = [int(x) for x in tokens]
    except ValueError as exc:
        raise InstanceError(f"non-integer token: {exc}") from None
    B, T, N = values[:3]
    body = values[3:]
    if len(body) != 2 * T + N:
        raise InstanceError(f"expected {2 * T + N} tokens after header, found {len(body)}")
    ids = body[0:2 * T:2]
    if ids != list(range(1, T + 1)):
        raise InstanceError("type ids must be 1..T in order")
    sizes = body[1:2 * T:2]
    seq = np.array(body[2 * T:], dtype=np.int64) - 1
    return Instance(B, np.array(sizes, dtype=np.int64), seq, name=name)


def write_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(format_instance(instance), encoding="utf-8")


def read_instance(path: str | Path) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), name=path.stem)
