import numpy as np
import pytest
from dataclasses import replace

from cgpp import DEFAULT_PARAMS, Instance, PolicyParams, l2_lower_bound, run_policy, solve_offline
from cgpp.model import FALLBACK, PLAN_MATCH, PLAN_OPEN
from cgpp.policies import PackingState, bestfit_step, cgpp_step, maybe_replan

from conftest import CASE1, random_instance
from oracles import best_fit_reference, check_solution


def test_bestfit_table_cases(case1, case2):
    sol, st = run_policy("bestfit", case1)
    labels = sorted(sorted(case1.sizes[np.repeat(np.arange(4), b.content)].tolist(), reverse=True) for b in sol.bins)
    assert labels == sorted([[5, 4], [4, 3, 2], [2]])
    assert st.replans == 0
    assert run_policy("bestfit", case2)[0].n_bins == 5


def test_bestfit_matches_reference():
    rng = np.random.default_rng(12)
    for _ in range(100):
        inst = random_instance(rng, max_items=80, max_types=8, max_capacity=60)
        sol, _ = run_policy("bestfit", inst)
        loads = [int(b.content @ inst.sizes) for b in sol.bins]
        assert loads == best_fit_reference(inst.item_sizes().tolist(), inst.bin_capacity)


def test_single_item_opens_bin():
    inst = Instance(10, [3], [0])
    state = PackingState(inst)
    bestfit_step(state, 0)
    assert len(state.bins) == 1 and state.bins[0].residual_capacity == 7


def test_case1_followed_by_plan(case1):
    # theta_o is lifted so the risk ratio (11 / 13.3 after two items) does not interrupt the plan
    params = PolicyParams(section_length=6, memory_length=6, theta_o=10).with_prior(case1.empirical_distribution())
    sol, st = run_policy("cgpp-l", case1, params)
    assert sol.n_bins == 2
    assert all(p.cause in (PLAN_OPEN, PLAN_MATCH) for p in sol.log)
    assert sol.n_bins == solve_offline(case1)[0].n_bins


def test_identical_items_reach_l2():
    inst = Instance(10, [5], [0] * 1000)
    sol, _ = run_policy("cgpp", inst)
    assert sol.n_bins == 500 == l2_lower_bound(inst)


def test_risk_ratio_threshold(case1):
    state = PackingState(case1, PolicyParams(section_length=6, memory_length=6, theta_o=0.8))
    state.adopt(np.full(4, 0.25))
    state.bins.clear()
    # w = 40 and e = 80 with theta_o = 0.8: ratio 0.5, the plan is followed
    state.open_space = 40
    state.mean_size = 80 / 6
    from cgpp.planner import generate_plan
    state.set_plan(generate_plan(case1, [1, 2, 1, 2]))
    _, cause = cgpp_step(state, 0)
    assert cause == PLAN_OPEN
    state.open_space = 70  # 70 / 80 >= 0.8: fall back
    _, cause = cgpp_step(state, 1)
    assert cause == FALLBACK and state.stats.fallback_risk == 1


def test_tolerance_table_triggers_replan(case1):
    params = PolicyParams(section_length=100, memory_length=6, theta_u=5).with_prior([0.5, 0.5, 0, 0])
    state = PackingState(case1, params)
    assert maybe_replan(state, known_distribution=True)
    state.step = 1
    state.tolerance[3] = 5
    assert maybe_replan(state, known_distribution=True)
    assert state.stats.replan_causes == ["start", "tolerance"]
    assert state.tolerance.max() == 0


def test_kl_trigger_and_warm_up():
    sizes = np.array([60, 30, 10])
    seq = [0] * 300 + [2] * 300
    inst = Instance(100, sizes, seq)
    params = PolicyParams(section_length=600, memory_length=100)
    sol, st = run_policy("cgpp", inst, params)
    assert st.replan_steps[0] == 100  # first k items are packed while the window fills
    assert "kl" in st.replan_causes
    assert all(p.cause == FALLBACK for p in sol.log[:100])


def test_section_start_forces_replan():
    rng = np.random.default_rng(0)
    inst = Instance(100, np.arange(60, 9, -10), rng.integers(0, 6, 3000))
    _, st = run_policy("cgpp", inst, PolicyParams(section_length=1000, memory_length=250))
    for start in (1000, 2000):
        assert start in st.replan_steps


def test_periodic_switch_replans():
    from cgpp import load_preset, sample_instance
    spec, B = load_preset("Poisson-P")
    inst = sample_instance(spec, B, 6000, seed=1)
    _, st = run_policy("cgpp", inst, PolicyParams(section_length=1000, memory_length=250))
    for change in (2000, 4000):
        assert any(change <= s < change + 2000 for s in st.replan_steps)


def test_dominance_under_certainty():
    rng = np.random.default_rng(31)
    for _ in range(60):
        inst = random_instance(rng, max_items=60, max_types=5, max_capacity=40, min_capacity=5)
        n = inst.n_items
        params = PolicyParams(section_length=n, memory_length=n).with_prior(inst.empirical_distribution())
        sol, _ = run_policy("cgpp-l", inst, params)
        offline, _ = solve_offline(inst)
        assert sol.n_bins <= offline.n_bins + inst.n_types


def test_parameter_validation():
    with pytest.raises(ValueError):
        PolicyParams(section_length=10, memory_length=20)
    with pytest.raises(ValueError):
        PolicyParams(theta_o=0)
    with pytest.raises(ValueError):
        run_policy("cgpp-l", Instance(10, [5], [0]))
    with pytest.raises(ValueError):
        run_policy("first-fit", Instance(10, [5], [0]))


# -- invariant suite ----------------------------------------------------------

def run_checked(policy, instance, params):
    """Drive the step functions directly, checking plan quota accounting after every item."""
    state = PackingState(instance, params)
    opened = 0
    plan = None
    for t in instance.sequence.tolist():
        if policy == "bestfit":
            bestfit_step(state, t)
        else:
            if policy == "cgpp":
                state.window.push(t)
            maybe_replan(state, known_distribution=policy == "cgpp-l")
            if state.plan is not plan:
                plan, opened = state.plan, 0
            _, cause = cgpp_step(state, t)
            opened += cause == PLAN_OPEN
            used = sum(e.quota - e.remaining for e in plan.entries)
            assert all(0 <= e.remaining <= e.quota for e in plan.entries)
            assert used == opened, "plan-open placements disagree with consumed quota"
        state.step += 1
    return state.solution()


def small_params(rng, instance):
    L = int(rng.integers(5, 60))
    return PolicyParams(section_length=L, memory_length=int(rng.integers(1, L + 1)),
                        theta_u=int(rng.integers(1, 6)), theta_o=float(rng.choice([0.5, 0.8, 1.5])))


@pytest.mark.parametrize("policy", ["bestfit", "cgpp", "cgpp-l"])
def test_invariants(policy):
    rng = np.random.default_rng({"bestfit": 1, "cgpp": 2, "cgpp-l": 3}[policy])
    for _ in range(100):
        inst = random_instance(rng, max_items=120, max_types=6, max_capacity=50)
        params = small_params(rng, inst).with_prior(inst.empirical_distribution())
        sol = run_checked(policy, inst, params)
        check_solution(sol, inst)
        assert sol.n_bins >= l2_lower_bound(inst)
        again, _ = run_policy(policy, inst, params)
        assert [b.content.tolist() for b in again.bins] == [b.content.tolist() for b in sol.bins]
        assert again.log == sol.log
