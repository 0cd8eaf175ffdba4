import numpy as np
import pytest

from cgpp import Instance

# The two motivating sequences: sizes (5, 4, 3, 2) in a bin of 10.
CASE1 = [5, 4, 4, 3, 2, 2]
CASE2 = [5, 4, 4, 3, 3, 3, 3, 3, 2, 2, 2, 2, 2, 2]


def table_instance(items):
    sizes = np.array([5, 4, 3, 2])
    index = {5: 0, 4: 1, 3: 2, 2: 3}
    return Instance(10, sizes, [index[s] for s in items])


@pytest.fixture
def case1():
    return table_instance(CASE1)


@pytest.fixture
def case2():
    return table_instance(CASE2)


def random_instance(rng, max_items=12, max_types=5, max_capacity=20, min_capacity=2):
    B = int(rng.integers(min_capacity, max_capacity + 1))
    T = int(rng.integers(1, min(max_types, B) + 1))
    sizes = np.sort(rng.choice(np.arange(1, B + 1), size=T, replace=False))[::-1]
    n = int(rng.integers(1, max_items + 1))
    return Instance(B, sizes, rng.integers(0, T, size=n))


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE: list[str] = []


def verdict(criterion: int, ok: bool, detail: str) -> None:
    """Print and record one pass/fail line, then fail the test if the criterion is not met."""
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
