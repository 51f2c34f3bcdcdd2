"""Instance files, plan and permit serialization, bundled fixtures.

Instance file grammar (UTF-8, line oriented)::

    # comment lines start with '#'; blank lines are ignored
    [params]
    p = 0.7
    permit_types = Reserved*, Unreserved     # optional; '*' marks a reserved type
    [lots]
    1, Lot 1, 40, 161                        # id, label, capacity per permit type
    [demand]
    1, Building 1, 41, 101                   # id, label, demand per permit type
    [distance]
    1, 255, 270, 440, 165, 285, 610          # building id, one cost per lot in lot-id order

Sections must appear once each, in this order. Integer fields reject
decimals. ``permit_types`` defaults to ``Reserved*, Unreserved``.
"""

from __future__ import annotations

import csv
import io
import json
import re
from importlib import resources

from .core import (
    AllocationPlan,
    Building,
    DistanceMatrix,
    InstanceParseError,
    InstanceValidationError,
    ParkingLot,
    PermitType,
    ProblemInstance,
    validate_instance,
)
from .permits import PermitIssuance, ServiceLevel

SECTIONS = ("params", "lots", "demand", "distance")
DEFAULT_TYPES = "Reserved*, Unreserved"
_INT = re.compile(r"[+-]?\d+\Z")
_HEADER = re.compile(r"\[(\w+)\]\Z")


def _int(tok: str, line: int, section: str, what: str) -> int:
    tok = tok.strip()
    if not _INT.match(tok):
        raise InstanceParseError(f"{what}: expected an integer, got {tok!r}", line, section)
    return int(tok)


def _parse_types(value: str, line: int) -> tuple[PermitType, ...]:
    out = []
    for idx, raw in enumerate(value.split(","), start=1):
        name = raw.strip()
        reserved = name.endswith("*")
        name = name.rstrip("*").strip()
        if not name:
            raise InstanceParseError(f"empty permit type name at position {idx}", line, "params")
        out.append(PermitType(idx, name, reserved))
    return tuple(out)


def parse_instance(document: str, validate: bool = True) -> ProblemInstance:
    """Parse an instance document.

    Syntax problems raise :class:`InstanceParseError` with a line number.
    With ``validate`` set, fatal findings of :func:`validate_instance` raise
    :class:`InstanceValidationError`.
    """
    rows: dict[str, list[tuple[int, str]]] = {}
    order: list[str] = []
    current = None
    for lineno, raw in enumerate(document.splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        header = _HEADER.match(text)
        if header:
            name = header.group(1)
            if name not in SECTIONS:
                raise InstanceParseError(f"unknown section [{name}]", lineno)
            if name in rows:
                raise InstanceParseError(f"duplicate section [{name}]", lineno)
            if order and SECTIONS.index(name) < SECTIONS.index(order[-1]):
                raise InstanceParseError(
                    f"section [{name}] out of order; expected order {', '.join(SECTIONS)}", lineno
                )
            rows[name] = []
            order.append(name)
            current = name
            continue
        if current is None:
            raise InstanceParseError("content before the first section header", lineno)
        rows[current].append((lineno, text))
    for name in SECTIONS:
        if name not in rows:
            raise InstanceParseError(f"missing section [{name}]")

    params: dict[str, tuple[int, str]] = {}
    for lineno, text in rows["params"]:
        if "=" not in text:
            raise InstanceParseError(f"expected key = value, got {text!r}", lineno, "params")
        key, value = (s.strip() for s in text.split("=", 1))
        if key not in ("p", "permit_types"):
            raise InstanceParseError(f"unknown parameter {key!r}", lineno, "params")
        if key in params:
            raise InstanceParseError(f"duplicate parameter {key!r}", lineno, "params")
        params[key] = (lineno, value)
    if "p" not in params:
        raise InstanceParseError("missing parameter 'p'", None, "params")
    p_line, p_text = params["p"]
    try:
        p = float(p_text)
    except ValueError:
        raise InstanceParseError(f"p: expected a number, got {p_text!r}", p_line, "params") from None
    t_line, t_text = params.get("permit_types", (None, DEFAULT_TYPES))
    types = _parse_types(t_text, t_line)
    l = len(types)

    lots = []
    for lineno, text in rows["lots"]:
        cells = [c.strip() for c in text.split(",")]
        if len(cells) != 2 + l:
            raise InstanceParseError(
                f"lot row has {len(cells)} fields, expected {2 + l} (id, label, {l} capacities)",
                lineno,
                "lots",
            )
        lot_id = _int(cells[0], lineno, "lots", "lot id")
        caps = tuple(_int(c, lineno, "lots", f"lot {lot_id} capacity") for c in cells[2:])
        lots.append(ParkingLot(lot_id, cells[1], caps))
    n = len(lots)

    buildings = []
    for lineno, text in rows["demand"]:
        cells = [c.strip() for c in text.split(",")]
        if len(cells) != 2 + l:
            raise InstanceParseError(
                f"demand row has {len(cells)} fields, expected {2 + l} (id, label, {l} demands)",
                lineno,
                "demand",
            )
        b_id = _int(cells[0], lineno, "demand", "building id")
        dem = tuple(_int(c, lineno, "demand", f"building {b_id} demand") for c in cells[2:])
        buildings.append(Building(b_id, cells[1], dem))

    by_building: dict[int, tuple[int, ...]] = {}
    for lineno, text in rows["distance"]:
        cells = [c.strip() for c in text.split(",")]
        b_id = _int(cells[0], lineno, "distance", "building id")
        if len(cells) - 1 != n:
            raise InstanceParseError(
                f"distance row for building {b_id} has {len(cells) - 1} entries, expected {n} (one per lot)",
                lineno,
                "distance",
            )
        if b_id in by_building:
            raise InstanceParseError(f"duplicate distance row for building {b_id}", lineno, "distance")
        if b_id not in {b.id for b in buildings}:
            raise InstanceParseError(f"distance row for unknown building {b_id}", lineno, "distance")
        by_building[b_id] = tuple(
            _int(c, lineno, "distance", f"D({b_id},{k})") for k, c in enumerate(cells[1:], start=1)
        )
    missing = [b.id for b in buildings if b.id not in by_building]
    if missing:
        raise InstanceParseError(f"no distance row for building(s) {missing}", None, "distance")
    dist = DistanceMatrix(tuple(by_building[b.id] for b in buildings))

    instance = ProblemInstance(types, tuple(buildings), tuple(lots), dist, p)
    if validate:
        report = validate_instance(instance)
        if report.errors:
            raise InstanceValidationError(report)
    return instance


def write_instance(instance: ProblemInstance) -> str:
    types = ", ".join(t.label + ("*" if t.reserved else "") for t in instance.permit_types)
    out = ["[params]", f"p = {instance.arrival_probability!r}", f"permit_types = {types}", "", "[lots]"]
    for lot in instance.lots:
        out.append(", ".join([str(lot.id), lot.label, *map(str, lot.capacity)]))
    out += ["", "[demand]"]
    for b in instance.buildings:
        out.append(", ".join([str(b.id), b.label, *map(str, b.demand)]))
    out += ["", "[distance]"]
    for b, row in zip(instance.buildings, instance.distances.entries):
        out.append(", ".join([str(b.id), *map(str, row)]))
    return "\n".join(out) + "\n"


def load_instance(path, validate: bool = True) -> ProblemInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), validate=validate)


def fixture_text(name: str = "ukzn_westville") -> str:
    return resources.files("parkalloc.data").joinpath(f"{name}.instance").read_text(encoding="utf-8")


def load_fixture(name: str = "ukzn_westville") -> ProblemInstance:
    """Bundled instances: ``ukzn_westville`` and ``ukzn_westville_d11_225``."""
    return parse_instance(fixture_text(name))


# --- plans -----------------------------------------------------------------


def _records(plan: AllocationPlan):
    l, m, n = plan.shape
    for i in range(l):
        for j in range(m):
            for k in range(n):
                c = plan.assignments[i][j][k]
                if c:
                    yield i + 1, j + 1, k + 1, c


def plan_to_dict(plan: AllocationPlan) -> dict:
    return {
        "objective": plan.objective,
        "reserved_mode": plan.reserved_mode,
        "shape": list(plan.shape),
        "assignments": [
            {"permit_type": i, "building": j, "lot": k, "count": c} for i, j, k, c in _records(plan)
        ],
    }


def parse_plan(document: str) -> AllocationPlan:
    data = json.loads(document)
    l, m, n = data["shape"]
    x = [[[0] * n for _ in range(m)] for _ in range(l)]
    for rec in data["assignments"]:
        x[rec["permit_type"] - 1][rec["building"] - 1][rec["lot"] - 1] = int(rec["count"])
    return AllocationPlan.from_nested(x, data["objective"], data["reserved_mode"])


def _plan_table(plan: AllocationPlan, instance: ProblemInstance | None) -> str:
    l, m, n = plan.shape
    if instance is not None:
        type_names = [t.label for t in instance.permit_types]
        lot_names = [lot.label for lot in instance.lots]
        bld_names = [b.label for b in instance.buildings]
    else:
        type_names = [f"Type {i + 1}" for i in range(l)]
        lot_names = [f"Lot {k + 1}" for k in range(n)]
        bld_names = [f"Building {j + 1}" for j in range(m)]
    x = plan.assignments
    w = max([12, *(len(s) + 2 for s in type_names)])
    bw = max([14, *(len(s) + 2 for s in bld_names)])
    mode = "reserved policy enforced" if plan.reserved_mode else "reserved policy not enforced"
    lines = [f"Parking allocation ({mode})", ""]
    head = f"{'':4}{'building':<{bw}}" + "".join(f"{t:>{w}}" for t in type_names) + f"{'total':>{w}}"
    for k in range(n):
        lines.append(f"{lot_names[k]}")
        lines.append(head)
        for j in range(m):
            vals = [x[i][j][k] for i in range(l)]
            if any(vals):
                lines.append(
                    f"{'':4}{bld_names[j]:<{bw}}" + "".join(f"{v:>{w}}" for v in vals) + f"{sum(vals):>{w}}"
                )
        sub = [sum(x[i][j][k] for j in range(m)) for i in range(l)]
        lines.append(f"{'':4}{'subtotal':<{bw}}" + "".join(f"{v:>{w}}" for v in sub) + f"{sum(sub):>{w}}")
        lines.append("")
    lines.append("Lot summary")
    lines.append(f"{'':4}{'lot':<{bw}}" + "".join(f"{t:>{w}}" for t in type_names) + f"{'total':>{w}}")
    for k in range(n):
        sub = [sum(x[i][j][k] for j in range(m)) for i in range(l)]
        lines.append(f"{'':4}{lot_names[k]:<{bw}}" + "".join(f"{v:>{w}}" for v in sub) + f"{sum(sub):>{w}}")
    grand = [sum(x[i][j][k] for j in range(m) for k in range(n)) for i in range(l)]
    lines.append(f"{'':4}{'all lots':<{bw}}" + "".join(f"{v:>{w}}" for v in grand) + f"{sum(grand):>{w}}")
    lines.append("")
    lines.append(f"Z = {plan.objective}")
    return "\n".join(lines) + "\n"


def write_plan(plan: AllocationPlan, fmt: str = "table", instance: ProblemInstance | None = None) -> str:
    """Serialize a plan as ``table``, ``json`` or ``csv``.

    ``instance`` only supplies labels for the table.
    """
    if fmt == "json":
        return json.dumps(plan_to_dict(plan), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["permit_type", "building", "lot", "count"])
        w.writerows(_records(plan))
        return buf.getvalue()
    if fmt == "table":
        return _plan_table(plan, instance)
    raise ValueError(f"unknown format {fmt!r}")


# --- permits ---------------------------------------------------------------


def permits_to_dict(permits: PermitIssuance) -> dict:
    out = {
        "per_lot": list(permits.per_lot),
        "fully_reserved_lots": sorted(permits.fully_reserved_lots),
    }
    s = permits.service_level
    if s is not None:
        out["service_level"] = {
            "psi": s.psi,
            "coefficients": list(s.coefficients),
            "roots": list(s.roots),
            "chosen_root": s.chosen_root,
            "effective_lot_count": s.effective_lot_count,
            "effective_users": s.effective_users,
            "participating_lots": list(s.participating_lots),
            "real_permits": list(s.real_permits),
        }
    return out


def permits_from_dict(data: dict) -> PermitIssuance:
    s = data.get("service_level")
    level = None
    if s is not None:
        level = ServiceLevel(
            psi=s["psi"],
            coefficients=tuple(s["coefficients"]),
            roots=tuple(s["roots"]),
            chosen_root=s["chosen_root"],
            effective_lot_count=s["effective_lot_count"],
            effective_users=s["effective_users"],
            participating_lots=tuple(s["participating_lots"]),
            real_permits=tuple(s["real_permits"]),
        )
    return PermitIssuance(
        tuple(int(a) for a in data["per_lot"]),
        level,
        frozenset(int(k) for k in data.get("fully_reserved_lots", ())),
    )


def write_permits(permits: PermitIssuance, fmt: str = "table", instance: ProblemInstance | None = None) -> str:
    if fmt == "json":
        return json.dumps(permits_to_dict(permits), indent=2, sort_keys=True) + "\n"
    caps = [lot.total_capacity for lot in instance.lots] if instance is not None else [None] * len(permits.per_lot)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lot", "capacity", "permits", "fully_reserved"])
        for k, a in enumerate(permits.per_lot, start=1):
            w.writerow([k, "" if caps[k - 1] is None else caps[k - 1], a, int(k in permits.fully_reserved_lots)])
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    lines = []
    s = permits.service_level
    if s is not None:
        a, b, c = s.coefficients
        lines += [
            f"service quadratic: {a:g} psi^2 {b:+.4f} psi {c:+.4f} = 0",
            f"  participating lots: {', '.join(map(str, s.participating_lots))} (n' = {s.effective_lot_count})",
            f"  effective users:    {s.effective_users}",
            f"  roots:              {s.roots[0]:.4f}, {s.roots[1]:.4f}",
            f"  chosen root:        {s.chosen_root} -> psi = {s.psi:.4f}",
            "",
        ]
    lines.append(f"{'lot':>4} {'N_k':>8} {'A_k':>8}")
    for k, a in enumerate(permits.per_lot, start=1):
        mark = "*" if k in permits.fully_reserved_lots else " "
        cap = "" if caps[k - 1] is None else caps[k - 1]
        lines.append(f"{mark}{k:>3} {cap:>8} {a:>8}")
    total_cap = sum(caps) if None not in caps else ""
    lines.append(f"{'total':>4} {total_cap:>8} {permits.total:>8}")
    if permits.fully_reserved_lots:
        lines.append("* fully reserved lot: one permit per space")
    return "\n".join(lines) + "\n"
