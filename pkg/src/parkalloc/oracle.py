"""Exhaustive reference solver for tiny instances.

Walks every integral tensor whose (type, building) rows sum to the demand,
one row at a time, in lexicographic order. Rows are compositions of the
demand into ``n`` parts; a part is skipped when it would overfill a lot's
permit count. Complete tensors are then checked against the permit totals and
(in reserved mode) the capacity lower bounds, and the cheapest survivor wins.
Among equal costs the first one found, i.e. the lexicographically smallest
flattened tensor, is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import AllocationPlan, BudgetExceeded, Infeasible, ProblemInstance
from .permits import PermitIssuance


@dataclass(frozen=True)
class EnumerationBudget:
    max_states: int = 2_000_000

    def __post_init__(self):
        if self.max_states <= 0:
            raise ValueError("max_states must be positive")


def _compositions(total: int, parts: int, room: list[int]):
    """Compositions of ``total`` into ``parts`` with part ``k`` at most ``room[k]``, lexicographic."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total <= room[0]:
            yield (total,)
        return
    for first in range(min(total, room[0]) + 1):
        for rest in _compositions(total - first, parts - 1, room[1:]):
            yield (first, *rest)


def brute_force_optimum(
    instance: ProblemInstance,
    permits: PermitIssuance,
    reserved_mode: bool = True,
    budget: EnumerationBudget | None = None,
) -> AllocationPlan:
    budget = budget or EnumerationBudget()
    l, m, n = instance.shape
    groups = [(i, j) for i in range(l) for j in range(m)]
    dist = instance.distances.entries
    room = list(permits.per_lot)
    if len(room) != n:
        raise Infeasible(f"{len(room)} permit counts for {n} lots")
    chosen: list[tuple[int, ...]] = [()] * len(groups)
    best: list = [None, None]  # cost, rows
    states = 0

    def leaf():
        if any(room):
            return
        if reserved_mode:
            for i in range(l):
                for k in range(n):
                    if sum(chosen[i * m + j][k] for j in range(m)) < instance.capacity(i, k):
                        return
        cost = sum(dist[j][k] * chosen[g][k] for g, (_, j) in enumerate(groups) for k in range(n))
        if best[0] is None or cost < best[0]:
            best[0] = cost
            best[1] = list(chosen)

    def walk(g: int):
        nonlocal states
        if g == len(groups):
            leaf()
            return
        i, j = groups[g]
        for row in _compositions(instance.demand(i, j), n, room):
            states += 1
            if states > budget.max_states:
                raise BudgetExceeded(f"more than {budget.max_states} partial assignments")
            for k in range(n):
                room[k] -= row[k]
            chosen[g] = row
            walk(g + 1)
            for k in range(n):
                room[k] += row[k]

    walk(0)
    if best[0] is None:
        raise Infeasible("no integral allocation satisfies the constraints")
    rows = best[1]
    x = [[list(rows[i * m + j]) for j in range(m)] for i in range(l)]
    return AllocationPlan.from_nested(x, best[0], reserved_mode)
