"""Allocation as a min-cost flow with arc lower bounds.

Network layout, in node order:

* group ``(i, j)``: supply ``P_ij`` (users of type i working in building j)
* pair ``(i, k)``: transshipment, collects type-i users parked in lot k
* lot ``k``: demand ``A_k``

Arcs ``group(i,j) -> pair(i,k)`` cost ``D_jk``; arcs ``pair(i,k) -> lot(k)``
cost 0 and, in reserved mode, carry lower bound ``M_ik``. Arcs are created in
(type, building, lot) order, which is also the order the solver scans them,
so alternate optima are resolved the same way on every run.

The solver is successive shortest paths with Dijkstra on reduced costs. Lower
bounds are removed up front (mandatory flow shifts node balances), and a
super source/sink feeds the balances. Final node potentials are returned as
an optimality certificate.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

from .core import (
    AllocationPlan,
    Infeasible,
    PermitMismatch,
    ProblemInstance,
    derived_totals,
)
from .permits import PermitIssuance


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    lower: int
    capacity: int
    cost: int
    key: tuple = ()  # ("assign", i, j, k) or ("bound", i, k)


@dataclass(frozen=True)
class FlowNetwork:
    node_labels: tuple[tuple, ...]
    supplies: tuple[int, ...]  # positive = supply, negative = demand
    arcs: tuple[Arc, ...]
    shape: tuple[int, int, int]
    reserved_mode: bool

    @property
    def lower_bounded_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.key and a.key[0] == "bound"]


@dataclass(frozen=True)
class SolveOutcome:
    plan: AllocationPlan
    flows: tuple[int, ...]
    potentials: tuple[int, ...]
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class Violation:
    family: str  # demand | permits | reserved | nonnegativity | integrality | objective | shape
    index: tuple
    expected: int
    actual: int

    def __str__(self) -> str:
        idx = ",".join(str(v) for v in self.index)
        return f"{self.family}({idx}): expected {self.expected}, got {self.actual}"


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[Violation, ...]
    recomputed_objective: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_family(self, family: str) -> list[Violation]:
        return [v for v in self.violations if v.family == family]


def build_network(
    instance: ProblemInstance, permits: PermitIssuance, reserved_mode: bool = True
) -> FlowNetwork:
    l, m, n = instance.shape
    totals = derived_totals(instance)
    if len(permits.per_lot) != n:
        raise PermitMismatch(f"{len(permits.per_lot)} permit counts for {n} lots")
    if permits.total != totals.users:
        raise PermitMismatch(f"permits total {permits.total} != users {totals.users}")
    big = totals.users

    labels: list[tuple] = []
    supplies: list[int] = []
    group = {}
    for i in range(l):
        for j in range(m):
            group[i, j] = len(labels)
            labels.append(("group", i + 1, j + 1))
            supplies.append(instance.demand(i, j))
    pair = {}
    for i in range(l):
        for k in range(n):
            pair[i, k] = len(labels)
            labels.append(("pair", i + 1, k + 1))
            supplies.append(0)
    lot = {}
    for k in range(n):
        lot[k] = len(labels)
        labels.append(("lot", k + 1))
        supplies.append(-permits.per_lot[k])

    arcs = []
    for i in range(l):
        for j in range(m):
            for k in range(n):
                arcs.append(
                    Arc(group[i, j], pair[i, k], 0, big, instance.distances[j, k], ("assign", i + 1, j + 1, k + 1))
                )
    for i in range(l):
        for k in range(n):
            lower = instance.capacity(i, k) if reserved_mode else 0
            arcs.append(Arc(pair[i, k], lot[k], lower, max(big, lower), 0, ("bound", i + 1, k + 1)))
    return FlowNetwork(tuple(labels), tuple(supplies), tuple(arcs), (l, m, n), reserved_mode)


class _Residual:
    __slots__ = ("to", "cap", "cost", "adj")

    def __init__(self, n_nodes: int):
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]

    def add(self, u: int, v: int, cap: int, cost: int) -> int:
        e = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e


def _dijkstra(g: _Residual, pot: list[int], s: int):
    inf = float("inf")
    dist = [inf] * len(g.adj)
    prev = [-1] * len(g.adj)
    dist[s] = 0
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        pu = pot[u]
        for e in g.adj[u]:
            if g.cap[e] <= 0:
                continue
            v = g.to[e]
            nd = d + g.cost[e] + pu - pot[v]
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, prev


def min_cost_flow(network: FlowNetwork) -> tuple[list[int], list[int], int]:
    """Return ``(flows per arc, node potentials, augmentations)`` or raise Infeasible."""
    n_nodes = len(network.supplies)
    if sum(network.supplies) != 0:
        raise Infeasible(f"unbalanced network: net supply {sum(network.supplies)}")
    balance = list(network.supplies)
    g = _Residual(n_nodes + 2)
    src, snk = n_nodes, n_nodes + 1
    edge_of = []
    for a in network.arcs:
        if a.cost < 0:
            raise ValueError(f"negative arc cost {a.cost} on {a.key}")
        if a.lower > a.capacity:
            raise Infeasible(f"lower bound {a.lower} exceeds capacity {a.capacity} on {a.key}")
        balance[a.tail] -= a.lower
        balance[a.head] += a.lower
        edge_of.append(g.add(a.tail, a.head, a.capacity - a.lower, a.cost))
    need = 0
    for v, b in enumerate(balance):
        if b > 0:
            g.add(src, v, b, 0)
            need += b
        elif b < 0:
            g.add(v, snk, -b, 0)

    pot = [0] * (n_nodes + 2)
    sent = 0
    iterations = 0
    while sent < need:
        dist, prev = _dijkstra(g, pot, src)
        if dist[snk] == float("inf"):
            break
        cap_t = dist[snk]
        for v in range(n_nodes + 2):
            pot[v] += dist[v] if dist[v] < cap_t else cap_t
        push = need - sent
        v = snk
        while v != src:
            e = prev[v]
            push = min(push, g.cap[e])
            v = g.to[e ^ 1]
        v = snk
        while v != src:
            e = prev[v]
            g.cap[e] -= push
            g.cap[e ^ 1] += push
            v = g.to[e ^ 1]
        sent += push
        iterations += 1

    if sent < need:
        _raise_infeasible(network, g, pot, src, n_nodes, need - sent)

    flows = [a.lower + g.cap[e ^ 1] for a, e in zip(network.arcs, edge_of)]
    return flows, pot[:n_nodes], iterations


def _raise_infeasible(network, g, pot, src, n_nodes, shortfall):
    # Nodes still reachable from the source sit on the source side of a minimum cut;
    # mandatory flow into a pair node on the far side is what cannot be routed.
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        for e in g.adj[u]:
            if g.cap[e] > 0 and g.to[e] not in seen:
                seen.add(g.to[e])
                stack.append(g.to[e])
    bounds = [
        (a.key[1], a.key[2])
        for a in network.arcs
        if a.key and a.key[0] == "bound" and a.lower > 0 and a.tail not in seen
    ]
    if not bounds:
        bounds = [(a.key[1], a.key[2]) for a in network.lower_bounded_arcs if a.lower > 0]
    if bounds:
        named = ", ".join(f"(type {i}, lot {k})" for i, k in bounds)
        msg = f"{shortfall} unit(s) of flow cannot be routed; reserved lower bounds unmet: {named}"
    else:
        msg = f"{shortfall} unit(s) of flow cannot be routed; permit counts unreachable"
    raise Infeasible(msg, bounds)


def _plan_from_flows(network: FlowNetwork, flows) -> AllocationPlan:
    l, m, n = network.shape
    x = [[[0] * n for _ in range(m)] for _ in range(l)]
    z = 0
    for a, f in zip(network.arcs, flows):
        if a.key and a.key[0] == "assign":
            _, i, j, k = a.key
            x[i - 1][j - 1][k - 1] = f
            z += a.cost * f
    return AllocationPlan.from_nested(x, z, network.reserved_mode)


def solve_min_cost_flow(network: FlowNetwork) -> SolveOutcome:
    start = time.perf_counter()
    flows, pot, iterations = min_cost_flow(network)
    elapsed = time.perf_counter() - start
    return SolveOutcome(
        plan=_plan_from_flows(network, flows),
        flows=tuple(flows),
        potentials=tuple(pot),
        iterations=iterations,
        wall_time=elapsed,
    )


def certificate_violations(network: FlowNetwork, flows, potentials) -> list[str]:
    """Check feasibility and complementary slackness of ``flows`` under ``potentials``.

    Reduced cost is ``cost + pi[tail] - pi[head]``. An arc below capacity needs a
    nonnegative reduced cost; an arc above its lower bound needs a nonpositive one.
    An empty list proves the flow optimal.
    """
    problems = []
    net = [0] * len(network.supplies)
    for idx, (a, f) in enumerate(zip(network.arcs, flows)):
        if f < a.lower or f > a.capacity:
            problems.append(f"arc {idx} {a.key}: flow {f} outside [{a.lower}, {a.capacity}]")
        net[a.tail] += f
        net[a.head] -= f
        rc = a.cost + potentials[a.tail] - potentials[a.head]
        if f < a.capacity and rc < 0:
            problems.append(f"arc {idx} {a.key}: residual capacity with reduced cost {rc} < 0")
        if f > a.lower and rc > 0:
            problems.append(f"arc {idx} {a.key}: flow above lower bound with reduced cost {rc} > 0")
    for v, (out, b) in enumerate(zip(net, network.supplies)):
        if out != b:
            problems.append(f"node {network.node_labels[v]}: net outflow {out} != supply {b}")
    return problems


def solve(instance: ProblemInstance, permits: PermitIssuance, reserved_mode: bool = True) -> SolveOutcome:
    return solve_min_cost_flow(build_network(instance, permits, reserved_mode))


def check_plan(
    instance: ProblemInstance,
    permits: PermitIssuance,
    plan: AllocationPlan,
    reserved_mode: bool | None = None,
) -> ConstraintReport:
    """Re-verify every constraint family by direct summation.

    ``reserved_mode`` defaults to the mode recorded on the plan; pass it
    explicitly to judge a plan against the other policy.
    """
    if reserved_mode is None:
        reserved_mode = plan.reserved_mode
    l, m, n = instance.shape
    x = plan.assignments
    v: list[Violation] = []
    if plan.shape != (l, m, n) or any(len(row) != n for layer in x for row in layer):
        v.append(Violation("shape", (), l * m * n, sum(len(r) for layer in x for r in layer)))
        return ConstraintReport(tuple(v), -1)

    z = 0
    for i in range(l):
        for j in range(m):
            for k in range(n):
                val = x[i][j][k]
                if not isinstance(val, int) or isinstance(val, bool):
                    v.append(Violation("integrality", (i + 1, j + 1, k + 1), 0, val))
                    continue
                if val < 0:
                    v.append(Violation("nonnegativity", (i + 1, j + 1, k + 1), 0, val))
                z += instance.distances[j, k] * val

    for i in range(l):
        for j in range(m):
            got = sum(x[i][j])
            if got != instance.demand(i, j):
                v.append(Violation("demand", (i + 1, j + 1), instance.demand(i, j), got))
    for k in range(n):
        got = sum(x[i][j][k] for i in range(l) for j in range(m))
        if got != permits.per_lot[k]:
            v.append(Violation("permits", (k + 1,), permits.per_lot[k], got))
    if reserved_mode:
        for i in range(l):
            for k in range(n):
                got = sum(x[i][j][k] for j in range(m))
                if got < instance.capacity(i, k):
                    v.append(Violation("reserved", (i + 1, k + 1), instance.capacity(i, k), got))
    if z != plan.objective:
        v.append(Violation("objective", (), z, plan.objective))
    return ConstraintReport(tuple(v), z)
