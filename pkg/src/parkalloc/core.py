"""Domain types shared by every part of the package.

Everything here is immutable. Matrices are stored as nested tuples of ints so
instances hash, compare field-for-field and can be shared between threads.
Index conventions: permit type ``i``, building ``j``, lot ``k``; ids in files
and reports are 1-based, positions in tuples are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Sequence


class ParkallocError(Exception):
    """Base class for all errors raised by this package."""


class InstanceParseError(ParkallocError):
    def __init__(self, message: str, line: int | None = None, section: str | None = None):
        self.line = line
        self.section = section
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]")
        prefix = " ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InstanceValidationError(ParkallocError):
    """Raised when a parsed instance has fatal validation findings."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(report.errors))


class PermitError(ParkallocError):
    pass


class NoRealRoot(PermitError):
    pass


class DegenerateQuadratic(PermitError):
    pass


class AllLotsReserved(PermitError):
    pass


class Infeasible(ParkallocError):
    """No allocation satisfies the constraints.

    ``bounds`` lists the (permit type, lot) pairs, 1-based, whose lower bounds
    could not be met, when that is what blocked the solve.
    """

    def __init__(self, message: str, bounds: Sequence[tuple[int, int]] = ()):
        self.bounds = tuple(bounds)
        super().__init__(message)


class PermitMismatch(ParkallocError):
    pass


class BudgetExceeded(ParkallocError):
    pass


@dataclass(frozen=True)
class PermitType:
    id: int
    label: str
    reserved: bool = False


@dataclass(frozen=True)
class Building:
    id: int
    label: str
    demand: tuple[int, ...]


@dataclass(frozen=True)
class ParkingLot:
    id: int
    label: str
    capacity: tuple[int, ...]

    @property
    def total_capacity(self) -> int:
        return sum(self.capacity)


@dataclass(frozen=True)
class DistanceMatrix:
    entries: tuple[tuple[int, ...], ...]

    def __getitem__(self, jk: tuple[int, int]) -> int:
        j, k = jk
        return self.entries[j][k]


@dataclass(frozen=True)
class ProblemInstance:
    permit_types: tuple[PermitType, ...]
    buildings: tuple[Building, ...]
    lots: tuple[ParkingLot, ...]
    distances: DistanceMatrix
    arrival_probability: float = 0.7

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.permit_types), len(self.buildings), len(self.lots)

    def demand(self, i: int, j: int) -> int:
        return self.buildings[j].demand[i]

    def capacity(self, i: int, k: int) -> int:
        return self.lots[k].capacity[i]

    def is_fully_reserved(self, k: int) -> bool:
        lot = self.lots[k]
        return all(
            c == 0 for t, c in zip(self.permit_types, lot.capacity) if not t.reserved
        )

    @classmethod
    def from_arrays(
        cls,
        demand,
        capacity,
        distances,
        p: float = 0.7,
        type_labels: Sequence[str] | None = None,
        reserved: Sequence[bool] | None = None,
    ) -> "ProblemInstance":
        """Build an instance from ``demand[i][j]``, ``capacity[i][k]`` and ``distances[j][k]``.

        With two permit types and no explicit flags, type 1 is the reserved one.
        """
        demand = [[int(v) for v in row] for row in demand]
        capacity = [[int(v) for v in row] for row in capacity]
        l = len(demand)
        m = len(demand[0]) if l else len(distances)
        n = len(capacity[0]) if l else (len(distances[0]) if len(distances) else 0)
        if type_labels is None:
            type_labels = ["Reserved", "Unreserved"] if l == 2 else [f"Type {i + 1}" for i in range(l)]
        if reserved is None:
            reserved = [i == 0 and l == 2 for i in range(l)]
        types = tuple(PermitType(i + 1, type_labels[i], bool(reserved[i])) for i in range(l))
        buildings = tuple(
            Building(j + 1, f"Building {j + 1}", tuple(demand[i][j] for i in range(l)))
            for j in range(m)
        )
        lots = tuple(
            ParkingLot(k + 1, f"Lot {k + 1}", tuple(capacity[i][k] for i in range(l)))
            for k in range(n)
        )
        dist = DistanceMatrix(tuple(tuple(int(v) for v in row) for row in distances))
        return cls(types, buildings, lots, dist, float(p))


@dataclass(frozen=True)
class AllocationPlan:
    """Integral assignment ``assignments[i][j][k]`` of users to lots."""

    assignments: tuple[tuple[tuple[int, ...], ...], ...]
    objective: int
    reserved_mode: bool

    @property
    def shape(self) -> tuple[int, int, int]:
        l = len(self.assignments)
        m = len(self.assignments[0]) if l else 0
        n = len(self.assignments[0][0]) if m else 0
        return l, m, n

    def lot_totals(self) -> tuple[int, ...]:
        l, m, n = self.shape
        return tuple(
            sum(self.assignments[i][j][k] for i in range(l) for j in range(m)) for k in range(n)
        )

    @classmethod
    def from_nested(cls, x, objective: int, reserved_mode: bool) -> "AllocationPlan":
        return cls(
            tuple(tuple(tuple(int(v) for v in row) for row in layer) for layer in x),
            int(objective),
            bool(reserved_mode),
        )

    @classmethod
    def zeros(cls, shape: tuple[int, int, int], reserved_mode: bool = True) -> "AllocationPlan":
        l, m, n = shape
        return cls(tuple(tuple((0,) * n for _ in range(m)) for _ in range(l)), 0, reserved_mode)


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class Totals:
    users: int  # T_U
    spaces: int  # T_S
    users_per_type: tuple[int, ...]
    spaces_per_lot: tuple[int, ...]
    spaces_per_type: tuple[int, ...] = field(default=())


def _is_int(v) -> bool:
    return isinstance(v, Integral) and not isinstance(v, bool)


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """Collect fatal errors and non-fatal warnings; never raises."""
    errors: list[str] = []
    warnings: list[str] = []
    types, buildings, lots = instance.permit_types, instance.buildings, instance.lots
    l, m, n = len(types), len(buildings), len(lots)

    p = instance.arrival_probability
    if not isinstance(p, Real) or not (0.0 < p <= 1.0):
        errors.append(f"[params] arrival probability outside (0,1]: p = {p}")

    for seq, what, section in (
        (types, "permit type", "params"),
        (buildings, "building", "demand"),
        (lots, "lot", "lots"),
    ):
        ids = [x.id for x in seq]
        if ids != list(range(1, len(seq) + 1)):
            errors.append(f"[{section}] {what} ids must be 1..{len(seq)} in order, got {ids}")

    shape_ok = True
    for b in buildings:
        if len(b.demand) != l:
            shape_ok = False
            errors.append(
                f"[demand] dimension mismatch: building {b.id} has {len(b.demand)} demand entries, expected {l}"
            )
            continue
        for i, v in enumerate(b.demand):
            if not _is_int(v):
                errors.append(f"[demand] building {b.id}, type {i + 1}: non-integral demand {v!r}")
            elif v < 0:
                errors.append(f"[demand] building {b.id}, type {i + 1}: negative demand {v}")
    for lot in lots:
        if len(lot.capacity) != l:
            shape_ok = False
            errors.append(
                f"[lots] dimension mismatch: lot {lot.id} has {len(lot.capacity)} capacity entries, expected {l}"
            )
            continue
        for i, v in enumerate(lot.capacity):
            if not _is_int(v):
                errors.append(f"[lots] lot {lot.id}, type {i + 1}: non-integral capacity {v!r}")
            elif v < 0:
                errors.append(f"[lots] lot {lot.id}, type {i + 1}: negative capacity {v}")

    rows = instance.distances.entries
    if len(rows) != m:
        shape_ok = False
        errors.append(f"[distance] dimension mismatch: {len(rows)} rows for {m} buildings")
    for j, row in enumerate(rows):
        if len(row) != n:
            shape_ok = False
            errors.append(
                f"[distance] dimension mismatch: building {j + 1} row has {len(row)} entries, expected {n}"
            )
            continue
        for k, v in enumerate(row):
            if not _is_int(v):
                errors.append(f"[distance] D({j + 1},{k + 1}) = {v!r} is not an integer")
            elif v < 0:
                errors.append(f"[distance] D({j + 1},{k + 1}) = {v} is negative")

    if shape_ok and not errors:
        totals = derived_totals(instance)
        for i, t in enumerate(types):
            if t.reserved and totals.users_per_type[i] != totals.spaces_per_type[i]:
                warnings.append(
                    f"reserved totals differ ({totals.users_per_type[i]} vs {totals.spaces_per_type[i]}) "
                    f"for permit type {t.id} ({t.label})"
                )
        if totals.users <= totals.spaces:
            warnings.append(
                f"T_U <= T_S ({totals.users} users, {totals.spaces} spaces): no over-issuance regime"
            )
    return ValidationReport(tuple(errors), tuple(warnings))


def derived_totals(instance: ProblemInstance) -> Totals:
    l = len(instance.permit_types)
    per_type = tuple(sum(b.demand[i] for b in instance.buildings) for i in range(l))
    per_lot = tuple(lot.total_capacity for lot in instance.lots)
    spaces_per_type = tuple(sum(lot.capacity[i] for lot in instance.lots) for i in range(l))
    return Totals(sum(per_type), sum(per_lot), per_type, per_lot, spaces_per_type)
