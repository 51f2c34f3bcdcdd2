"""Permit over-issuance from the service-level quadratic.

Lots that hold only reserved spaces get exactly one permit per space. The
other lots share a common service deviate ``psi``; solving the aggregated
quadratic for ``psi`` and substituting back gives each lot's permit count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    AllLotsReserved,
    DegenerateQuadratic,
    Infeasible,
    NoRealRoot,
    ProblemInstance,
    derived_totals,
)


@dataclass(frozen=True)
class ServiceLevel:
    psi: float
    coefficients: tuple[float, float, float]
    roots: tuple[float, float]
    chosen_root: str  # "low" or "high"
    effective_lot_count: int
    effective_users: int
    participating_lots: tuple[int, ...]  # 1-based lot ids
    real_permits: tuple[float, ...]  # pre-rounding value per participating lot


@dataclass(frozen=True)
class PermitIssuance:
    per_lot: tuple[int, ...]
    service_level: ServiceLevel | None = None
    fully_reserved_lots: frozenset[int] = frozenset()  # 1-based lot ids

    @property
    def total(self) -> int:
        return sum(self.per_lot)

    @classmethod
    def fixed(cls, per_lot) -> "PermitIssuance":
        """Permit counts given directly rather than computed."""
        return cls(tuple(int(a) for a in per_lot))


def solve_quadratic(a: float, b: float, c: float) -> tuple[float, float]:
    """Both real roots of ``a x^2 + b x + c``, ascending.

    Uses the cancellation-free form: one root from ``q = -(b + sign(b) sqrt(disc)) / 2``
    divided into ``a``, the other as ``c / q``.
    """
    if a == 0:
        raise DegenerateQuadratic("leading coefficient is zero")
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise NoRealRoot(f"discriminant {disc:.6g} < 0: no real service deviate")
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        # b == 0 and disc == 0, hence c == 0
        return (0.0, 0.0)
    r1, r2 = q / a, c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _participating(instance: ProblemInstance) -> list[int]:
    return [k for k in range(len(instance.lots)) if not instance.is_fully_reserved(k)]


def build_quadratic(instance: ProblemInstance) -> tuple[float, float, float, int, int]:
    """Coefficients ``(a, b, c)`` plus participating lot count and effective users."""
    part = _participating(instance)
    if not part:
        raise AllLotsReserved("every lot is fully reserved; permits equal capacities")
    totals = derived_totals(instance)
    caps = totals.spaces_per_lot
    reserved_only = sum(caps[k] for k in range(len(caps)) if k not in part)
    users = totals.users - reserved_only
    p = instance.arrival_probability
    a = float(len(part))
    b = -2.0 * math.fsum(math.sqrt(caps[k]) for k in part)
    c = -2.0 * (p * users - sum(caps[k] for k in part))
    return a, b, c, len(part), users


def permit_formula(capacity: int, psi: float, p: float) -> float:
    """Real-valued permit count for one lot at service deviate ``psi``."""
    return ((2.0 * capacity + psi * psi) - 2.0 * psi * math.sqrt(capacity)) / (2.0 * p)


def apportion(values, total: int) -> list[int]:
    """Round half-up, then move single units by largest remainder until the sum is ``total``.

    Ties favour the lower index, both when adding and when removing units.
    """
    counts = [math.floor(v + 0.5) for v in values]
    diff = total - sum(counts)
    while diff != 0:
        residual = [v - c for v, c in zip(values, counts)]
        if diff > 0:
            idx = max(range(len(counts)), key=lambda t: (residual[t], -t))
            counts[idx] += 1
            diff -= 1
        else:
            idx = min(range(len(counts)), key=lambda t: (residual[t], -t))
            counts[idx] -= 1
            diff += 1
    return counts


def compute_permits(instance: ProblemInstance) -> PermitIssuance:
    n = len(instance.lots)
    caps = [lot.total_capacity for lot in instance.lots]
    part = _participating(instance)
    reserved_ids = frozenset(k + 1 for k in range(n) if k not in part)
    if not part:
        raise AllLotsReserved("every lot is fully reserved; permits equal capacities")

    a, b, c, n_eff, users = build_quadratic(instance)
    if users <= 0:
        raise Infeasible(
            f"no users left for shared lots after fully reserved lots take {sum(caps) - sum(caps[k] for k in part)}"
        )
    roots = solve_quadratic(a, b, c)
    psi = roots[0]
    if psi <= 0:
        raise Infeasible(
            f"service deviate roots {roots[0]:.6g}, {roots[1]:.6g}: smaller root is not positive "
            "(expected arrivals exceed shared capacity)"
        )
    p = instance.arrival_probability
    real = [permit_formula(caps[k], psi, p) for k in part]
    counts = apportion(real, users)
    per_lot = list(caps)
    for k, cnt in zip(part, counts):
        per_lot[k] = cnt
    level = ServiceLevel(
        psi=psi,
        coefficients=(a, b, c),
        roots=roots,
        chosen_root="low",
        effective_lot_count=n_eff,
        effective_users=users,
        participating_lots=tuple(k + 1 for k in part),
        real_permits=tuple(real),
    )
    return PermitIssuance(tuple(per_lot), level, reserved_ids)


def service_deviates(instance: ProblemInstance, permits: PermitIssuance) -> dict[int, tuple[float, float]]:
    """Per participating lot: ``(N - pA)/sqrt(pA)`` and ``(N - pA)/sqrt(p(1-p)A)``.

    The permit formula equalises the first one across lots (it is derived with
    ``sqrt(pA)`` as the spread); the binomial form is larger by ``1/sqrt(1-p)``.
    """
    p = instance.arrival_probability
    out = {}
    level = permits.service_level
    lots = level.participating_lots if level else [k + 1 for k in _participating(instance)]
    for lot_id in lots:
        k = lot_id - 1
        cap = instance.lots[k].total_capacity
        a = permits.per_lot[k]
        mean = p * a
        poisson = (cap - mean) / math.sqrt(mean) if mean > 0 else math.inf
        var = p * (1.0 - p) * a
        binom = (cap - mean) / math.sqrt(var) if var > 0 else math.inf
        out[lot_id] = (poisson, binom)
    return out
