import numpy as np
import pytest
from scipy.optimize import linprog

from cgpp.lp import DualFormSimplex, InfeasibleError, RmpLp, solve_rmp_lp

from oracles import lp_vertex_objective


def random_rmp(rng, max_types=6, max_cols=40):
    T = int(rng.integers(1, max_types + 1))
    H = int(rng.integers(1, max_cols + 1))
    cols = rng.integers(0, 4, size=(H, T))
    # every type covered by at least its own singleton column
    cols = np.vstack([cols, np.diag(rng.integers(1, 4, size=T))])
    cols = cols[cols.sum(axis=1) > 0]
    q = rng.integers(0, 10, size=T).astype(float) * rng.random(T).round(2)
    return cols.astype(float), q


def assert_certificate(res, cols, q, tol=1e-6):
    z, d = res.primal, res.duals
    assert np.all(z >= -tol)
    assert np.all(cols.T @ z >= q - tol), "primal infeasible"
    assert np.all(d >= -tol)
    assert np.all(cols @ d <= 1 + tol), "dual infeasible"
    assert abs(z.sum() - q @ d) <= tol * max(1.0, abs(z.sum())), "duality gap"
    assert abs(res.objective - z.sum()) <= tol * max(1.0, abs(z.sum()))
    # complementary slackness
    assert np.all(np.abs(z * (1 - cols @ d)) <= tol)
    assert np.all(np.abs(d * (cols.T @ z - q)) <= tol)


def test_diagonal_example():
    cols = np.diag([2.0, 2.0, 3.0, 5.0])
    res = solve_rmp_lp(RmpLp(cols, [1, 2, 1, 2]))
    assert res.primal == pytest.approx([0.5, 1, 1 / 3, 0.4])
    assert res.duals == pytest.approx([0.5, 0.5, 1 / 3, 0.2])
    assert res.objective == pytest.approx(2.2333333333)


def test_single_column():
    res = solve_rmp_lp(RmpLp([[0, 4.0]], [0, 7]))
    assert res.primal == pytest.approx([7 / 4])
    assert res.duals[1] == pytest.approx(1 / 4)


def test_zero_demand():
    res = solve_rmp_lp(RmpLp(np.eye(3), np.zeros(3)))
    assert res.objective == 0
    assert np.all(res.primal == 0) and np.all(res.duals == 0)


def test_uncovered_type_is_infeasible():
    with pytest.raises(InfeasibleError):
        solve_rmp_lp(RmpLp([[1.0, 0.0]], [1, 1]))


def test_random_certificates_and_vertex_oracle():
    rng = np.random.default_rng(7)
    compared = 0
    for _ in range(500):
        cols, q = random_rmp(rng)
        res = solve_rmp_lp(RmpLp(cols, q))
        assert_certificate(res, cols, q)
        if cols.shape[1] <= 4:
            assert res.objective == pytest.approx(lp_vertex_objective(cols, q), abs=1e-6)
            compared += 1
    assert compared > 100


def test_warm_start_matches_cold_solve():
    rng = np.random.default_rng(3)
    for _ in range(60):
        cols, q = random_rmp(rng)
        res = solve_rmp_lp(RmpLp(cols, q))
        for _ in range(3):
            extra = rng.integers(0, 4, size=(2, len(q))).astype(float)
            cols = np.vstack([cols, extra])
            res = solve_rmp_lp(RmpLp(cols, q), warm_start=res)
            cold = linprog(np.ones(len(cols)), A_ub=-cols.T, b_ub=-q, bounds=(0, None), method="highs")
            assert res.objective == pytest.approx(cold.fun, abs=1e-6)
            assert_certificate(res, cols, q)


def test_bound_columns_continue_from_basis():
    # max q.d s.t. G d <= 1 with an extra variable of cost 2 and column e_0
    G = np.diag([2.0, 3.0])
    lp = DualFormSimplex(G, np.array([1.0, 1.0]))
    lp.solve()
    assert lp.objective() == pytest.approx(1 / 2 + 1 / 3)
    lp.add_columns(np.array([[1.0], [0.0]]), [2.0])
    lp.solve()
    ref = linprog(-np.array([1.0, 1.0, 2.0]), A_ub=np.hstack([G, [[1.0], [0.0]]]), b_ub=[1, 1], method="highs")
    assert lp.objective() == pytest.approx(-ref.fun)
