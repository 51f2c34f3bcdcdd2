"""Exit criteria. A summary line per criterion is printed at the end of the run."""

import json
import math
import random
import time

import pytest

from gen import random_instance
from parkalloc.allocate import (
    build_network,
    certificate_violations,
    check_plan,
    solve,
    solve_min_cost_flow,
)
from parkalloc.cli import main
from parkalloc.core import Infeasible
from parkalloc.ingest import (
    fixture_text,
    load_fixture,
    parse_instance,
    parse_plan,
    write_instance,
    write_plan,
)
from parkalloc.oracle import brute_force_optimum
from parkalloc.permits import build_quadratic, compute_permits, solve_quadratic
from parkalloc.simulate import exact_binomial_tail, simulate_arrivals

REFERENCE_Z = {True: 229160, False: 210395}


@pytest.mark.criterion(1, "service quadratic (4, -113.2122, 164.4), psi = 1.535")
def test_service_quadratic(ukzn):
    a, b, c, n_eff, users = build_quadratic(ukzn)
    assert a == 4
    assert abs(b - (-113.2122)) <= 1e-3
    assert abs(c - 164.4) <= 1e-1
    low, _ = solve_quadratic(a, b, c)
    assert low > 0
    assert abs(low - 1.535) <= 0.001


@pytest.mark.criterion(2, "permit table A = {258,138,157,178,68,491}, sum 1290")
def test_permit_table(ukzn):
    issued = compute_permits(ukzn)
    assert issued.per_lot == (258, 138, 157, 178, 68, 491)
    assert sum(issued.per_lot) == 1290


def _solve_ukzn(instance):
    issued = compute_permits(instance)
    out = {}
    for mode in (True, False):
        start = time.perf_counter()
        net = build_network(instance, issued, mode)
        outcome = solve_min_cost_flow(net)
        elapsed = time.perf_counter() - start
        out[mode] = (outcome, certificate_violations(net, outcome.flows, outcome.potentials), elapsed)
    return out


@pytest.mark.criterion("3", "objective Z = 229160 reserved / 210395 unreserved, exact, < 1 s")
def test_objective_reproduction(ukzn):
    results = _solve_ukzn(ukzn)
    got = {mode: results[mode][0].plan.objective for mode in (True, False)}
    for mode in (True, False):
        assert results[mode][1] == [], "optimality certificate must hold"
        assert results[mode][2] < 1.0
    assert got == REFERENCE_Z, (
        f"discrepancy: certified optimum Z = {got[True]} (reserved) / {got[False]} (unreserved) "
        f"on the transcribed distance table; reference {REFERENCE_Z[True]} / {REFERENCE_Z[False]}"
    )


@pytest.mark.criterion("3b", "fallback: valid optimality certificate, discrepancy reported, < 1 s")
def test_objective_certificate_and_discrepancy(ukzn, capsys):
    results = _solve_ukzn(ukzn)
    with capsys.disabled():
        for mode in (True, False):
            outcome, problems, elapsed = results[mode]
            assert problems == []
            assert elapsed < 1.0
            z = outcome.plan.objective
            label = "reserved" if mode else "unreserved"
            print(f"\n  {label}: certified Z = {z}, reference {REFERENCE_Z[mode]}, difference {z - REFERENCE_Z[mode]:+d}")


@pytest.mark.criterion("3c", "D(1,1) = 225 variant reproduces 229160 / 210395 exactly")
def test_objective_variant():
    results = _solve_ukzn(load_fixture("ukzn_westville_d11_225"))
    for mode in (True, False):
        outcome, problems, _ = results[mode]
        assert problems == []
        assert outcome.plan.objective == REFERENCE_Z[mode]


@pytest.mark.criterion(4, "unreserved optimum violates reserved bounds; reserved optimum does not")
def test_reserved_feasibility_contrast(ukzn, ukzn_permits):
    free = solve(ukzn, ukzn_permits, False).plan
    bound = solve(ukzn, ukzn_permits, True).plan
    assert check_plan(ukzn, ukzn_permits, free, reserved_mode=True).by_family("reserved")
    assert check_plan(ukzn, ukzn_permits, bound, reserved_mode=True).violations == ()


@pytest.mark.criterion(5, "flow solver equals brute force on 100 random instances, < 60 s")
def test_oracle_equivalence():
    rng = random.Random(20130530)
    start = time.perf_counter()
    compared = feasible = 0
    for _ in range(100):
        inst, permits = random_instance(rng, max_l=2, max_m=3, max_n=3, max_demand=5)
        for mode in (True, False):
            try:
                z_oracle = brute_force_optimum(inst, permits, mode).objective
            except Infeasible:
                z_oracle = None
            try:
                z_flow = solve(inst, permits, mode).plan.objective
            except Infeasible:
                z_flow = None
            assert z_flow == z_oracle
            compared += 1
            feasible += z_flow is not None
    assert time.perf_counter() - start < 60
    assert 0 < feasible < compared


@pytest.mark.criterion(6, "1000 random instances: integral plans, zero check_plan violations")
def test_integrality_suite():
    rng = random.Random(6)
    solved = 0
    for _ in range(1000):
        inst, permits = random_instance(rng, max_l=3, max_m=6, max_n=5, max_demand=12, max_cap=4, max_dist=500)
        for mode in (True, False):
            try:
                plan = solve(inst, permits, mode).plan
            except Infeasible:
                continue
            assert all(type(v) is int and v >= 0 for layer in plan.assignments for row in layer for v in row)
            assert check_plan(inst, permits, plan).violations == ()
            solved += 1
    assert solved >= 1000


@pytest.mark.criterion(7, "100000-trial simulation matches binomial tail and mean")
def test_simulation_consistency(ukzn, ukzn_permits):
    trials = 100_000
    report = simulate_arrivals(ukzn_permits, ukzn, trials=trials, seed=2013)
    for lot in report.lots:
        q = exact_binomial_tail(lot.permits, 0.7, lot.capacity)
        assert lot.exact_overflow == q
        assert abs(lot.overflow_probability - q) <= 4 * math.sqrt(q * (1 - q) / trials)
        std = math.sqrt(0.7 * 0.3 * lot.permits)
        assert abs(lot.mean_arrivals - 0.7 * lot.permits) <= 3 * std / math.sqrt(trials)


@pytest.mark.criterion(8, "round-trips and repeated runs are bit-identical")
def test_round_trip_and_determinism(ukzn, ukzn_permits, tmp_path, capsys):
    text = write_instance(ukzn)
    assert parse_instance(text) == ukzn
    assert write_instance(parse_instance(text)) == text
    for mode in (True, False):
        plan = solve(ukzn, ukzn_permits, mode).plan
        blob = write_plan(plan, "json")
        assert parse_plan(blob) == plan
        assert write_plan(parse_plan(blob), "json") == blob
        assert solve(ukzn, ukzn_permits, mode).plan == plan

    path = tmp_path / "ukzn.instance"
    path.write_text(fixture_text())
    outputs = []
    for _ in range(2):
        for argv in (
            ["solve", str(path), "--format", "json"],
            ["solve", str(path), "--format", "table", "--no-reserved"],
            ["permits", str(path), "--format", "json"],
            ["simulate", str(path), "--trials", "2000", "--seed", "9", "--format", "json"],
        ):
            assert main(argv) == 0
            outputs.append(capsys.readouterr().out)
    assert outputs[:4] == outputs[4:]
    json.loads(outputs[0])
