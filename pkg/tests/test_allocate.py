import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_instance
from parkalloc.allocate import (
    build_network,
    certificate_violations,
    check_plan,
    solve,
    solve_min_cost_flow,
)
from parkalloc.core import AllocationPlan, Infeasible, PermitMismatch, ProblemInstance
from parkalloc.permits import PermitIssuance


def test_ukzn_network_shape(ukzn, ukzn_permits):
    net = build_network(ukzn, ukzn_permits, reserved_mode=True)
    kinds = [label[0] for label in net.node_labels]
    assert kinds.count("group") == 24
    assert kinds.count("pair") == 12
    assert kinds.count("lot") == 6
    bounded = net.lower_bounded_arcs
    assert len(bounded) == 12
    reserved_bounds = [a.lower for a in bounded if a.key[1] == 1]
    assert reserved_bounds == [40, 138, 27, 32, 68, 72]
    assert [a.lower for a in bounded if a.key[1] == 2] == [161, 0, 99, 110, 0, 300]
    assert sum(s for s in net.supplies if s > 0) == 1290
    assert sum(net.supplies) == 0
    assign = [a for a in net.arcs if a.key[0] == "assign"]
    assert len(assign) == 144
    assert all(a.cost == ukzn.distances[a.key[2] - 1, a.key[3] - 1] for a in assign)
    assert all(a.cost == 0 for a in bounded)


def test_no_reserved_drops_bounds(ukzn, ukzn_permits):
    with_bounds = build_network(ukzn, ukzn_permits, True)
    without = build_network(ukzn, ukzn_permits, False)
    assert all(a.lower == 0 for a in without.arcs)
    assert [(a.tail, a.head, a.cost) for a in with_bounds.arcs] == [(a.tail, a.head, a.cost) for a in without.arcs]


def test_single_path():
    inst = ProblemInstance.from_arrays([[5]], [[0]], [[7]], reserved=[False])
    net = build_network(inst, PermitIssuance.fixed([5]), True)
    assert len(net.node_labels) == 3
    assert len(net.arcs) == 2
    out = solve_min_cost_flow(net)
    assert out.flows == (5, 5)
    assert out.plan.objective == 35


def test_two_by_two():
    # enumeration of all splits of 2 users per building: only the diagonal costs 4
    inst = ProblemInstance.from_arrays([[2, 2]], [[0, 0]], [[1, 5], [5, 1]], reserved=[False])
    out = solve(inst, PermitIssuance.fixed([2, 2]))
    assert out.plan.assignments == (((2, 0), (0, 2)),)
    assert out.plan.objective == 4


def test_permit_mismatch(ukzn):
    with pytest.raises(PermitMismatch):
        build_network(ukzn, PermitIssuance.fixed([1, 1, 1, 1, 1, 1]), True)


def test_reserved_capacity_exceeds_demand():
    # 3 reserved users, 4 reserved spaces
    inst = ProblemInstance.from_arrays([[3], [5]], [[2, 2], [2, 2]], [[1, 2]])
    with pytest.raises(Infeasible) as err:
        solve(inst, PermitIssuance.fixed([4, 4]), True)
    assert err.value.bounds
    assert {i for i, _ in err.value.bounds} == {1}
    assert "type 1" in str(err.value)
    solve(inst, PermitIssuance.fixed([4, 4]), False)


def test_ukzn_certificate(ukzn, ukzn_permits):
    for mode in (True, False):
        net = build_network(ukzn, ukzn_permits, mode)
        out = solve_min_cost_flow(net)
        assert certificate_violations(net, out.flows, out.potentials) == []
        assert check_plan(ukzn, ukzn_permits, out.plan).ok


def test_certificate_rejects_suboptimal_flow(ukzn, ukzn_permits):
    net = build_network(ukzn, ukzn_permits, True)
    out = solve_min_cost_flow(net)
    assert certificate_violations(net, out.flows, [0] * len(out.potentials))
    flows = list(out.flows)
    flows[0] += 1
    assert certificate_violations(net, flows, out.potentials)


def test_ukzn_matches_independent_lp(ukzn, ukzn_permits):
    np = pytest.importorskip("numpy")
    optimize = pytest.importorskip("scipy.optimize")
    l, m, n = ukzn.shape
    idx = lambda i, j, k: (i * m + j) * n + k  # noqa: E731
    cost = np.zeros(l * m * n)
    for i in range(l):
        for j in range(m):
            for k in range(n):
                cost[idx(i, j, k)] = ukzn.distances[j, k]
    a_eq, b_eq = [], []
    for i in range(l):
        for j in range(m):
            row = np.zeros(l * m * n)
            row[[idx(i, j, k) for k in range(n)]] = 1
            a_eq.append(row)
            b_eq.append(ukzn.demand(i, j))
    for k in range(n):
        row = np.zeros(l * m * n)
        row[[idx(i, j, k) for i in range(l) for j in range(m)]] = 1
        a_eq.append(row)
        b_eq.append(ukzn_permits.per_lot[k])
    a_ub, b_ub = [], []
    for i in range(l):
        for k in range(n):
            row = np.zeros(l * m * n)
            row[[idx(i, j, k) for j in range(m)]] = -1
            a_ub.append(row)
            b_ub.append(-ukzn.capacity(i, k))
    res = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, method="highs")
    free = optimize.linprog(cost, A_eq=a_eq, b_eq=b_eq, method="highs")
    assert solve(ukzn, ukzn_permits, True).plan.objective == round(res.fun)
    assert solve(ukzn, ukzn_permits, False).plan.objective == round(free.fun)


def test_check_plan_zero(ukzn, ukzn_permits):
    report = check_plan(ukzn, ukzn_permits, AllocationPlan.zeros(ukzn.shape))
    demand = report.by_family("demand")
    positive = [(i + 1, j + 1) for i in range(2) for j in range(12) if ukzn.demand(i, j) > 0]
    assert [v.index for v in demand] == positive
    assert report.recomputed_objective == 0


def test_check_plan_flags_objective_and_sign():
    inst = ProblemInstance.from_arrays([[2]], [[0, 0]], [[1, 5]], reserved=[False])
    bad = AllocationPlan.from_nested([[[3, -1]]], 0, False)
    report = check_plan(inst, PermitIssuance.fixed([3, -1]), bad)
    families = {v.family for v in report.violations}
    assert families == {"nonnegativity", "objective"}


def test_no_reserved_plan_breaks_reserved_policy(ukzn, ukzn_permits):
    plan = solve(ukzn, ukzn_permits, False).plan
    assert check_plan(ukzn, ukzn_permits, plan).ok
    violations = check_plan(ukzn, ukzn_permits, plan, reserved_mode=True).by_family("reserved")
    assert {v.index for v in violations} >= {(1, 2), (1, 5)}


def test_determinism(ukzn, ukzn_permits):
    a = solve(ukzn, ukzn_permits, True)
    b = solve(ukzn, ukzn_permits, True)
    assert a.plan == b.plan
    assert a.flows == b.flows
    assert a.potentials == b.potentials


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_plans_integral_and_certified(seed):
    inst, permits = random_instance(random.Random(seed), max_l=3, max_m=5, max_n=4, max_demand=8, max_dist=50)
    for mode in (True, False):
        net = build_network(inst, permits, mode)
        try:
            out = solve_min_cost_flow(net)
        except Infeasible:
            assert mode, "zero lower bounds on a balanced network are always feasible"
            continue
        assert all(type(f) is int for f in out.flows)
        assert check_plan(inst, permits, out.plan).ok
        assert certificate_violations(net, out.flows, out.potentials) == []


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reserved_mode_never_cheaper(seed):
    inst, permits = random_instance(random.Random(seed), max_m=4, max_n=4, max_demand=8, max_dist=50)
    free = solve(inst, permits, False).plan.objective
    try:
        bound = solve(inst, permits, True).plan.objective
    except Infeasible:
        return
    assert bound >= free
