"""Command-line front end.

Exit status: 0 success, 1 validation (or plan check) failure, 2 infeasible,
3 I/O, parse or usage error. Only the requested artifact goes to stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import allocate, ingest, oracle, permits, simulate
from .core import (
    BudgetExceeded,
    Infeasible,
    InstanceParseError,
    InstanceValidationError,
    ParkallocError,
    PermitError,
    PermitMismatch,
    validate_instance,
)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parkalloc", description="Campus parking permits and allocation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("table", "json", "csv")):
        p.add_argument("instance", help="instance file")
        p.add_argument("--p", dest="p_override", type=float, help="override the arrival probability")
        p.add_argument("--format", dest="output_format", choices=formats, default="table")
        p.add_argument("--output", dest="output_path", help="write the artifact here instead of stdout")

    p = sub.add_parser("validate", help="check an instance file")
    common(p, ("table", "json"))

    p = sub.add_parser("permits", help="compute permit counts per lot")
    common(p)

    for name, text in (("solve", "compute permits and the optimal allocation"), ("oracle", None)):
        p = sub.add_parser(name, help=text) if text else sub.add_parser(name)
        common(p)
        p.add_argument("--no-reserved", dest="reserved_mode", action="store_false")
        p.add_argument("--permits-file", dest="permits_path", help="permits JSON from `permits --format json`")
        if name == "oracle":
            p.add_argument("--max-states", type=int, default=oracle.EnumerationBudget().max_states)

    p = sub.add_parser("simulate", help="Monte-Carlo arrivals against permit counts")
    common(p)
    p.add_argument("--permits-file", dest="permits_path")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _err(msg: str) -> None:
    print(f"parkalloc: {msg}", file=sys.stderr)


def _load(args):
    instance = ingest.load_instance(args.instance, validate=False)
    if args.p_override is not None:
        instance = dataclasses.replace(instance, arrival_probability=args.p_override)
    return instance


def _permits(args, instance):
    if getattr(args, "permits_path", None):
        with open(args.permits_path, encoding="utf-8") as fh:
            return ingest.permits_from_dict(json.load(fh))
    return permits.compute_permits(instance)


def _render_validation(report, fmt):
    if fmt == "json":
        return json.dumps({"errors": list(report.errors), "warnings": list(report.warnings)}, indent=2) + "\n"
    lines = [f"error: {e}" for e in report.errors] + [f"warning: {w}" for w in report.warnings]
    lines.append("ok" if report.ok else f"{len(report.errors)} error(s)")
    return "\n".join(lines) + "\n"


def _render_simulation(report, fmt):
    rows = [dataclasses.asdict(lot) for lot in report.lots]
    if fmt == "json":
        data = {"seed": report.seed, "trials": report.trials, "p": report.p, "lots": rows}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        keys = list(rows[0]) if rows else []
        return "\n".join([",".join(keys), *(",".join(repr(r[k]) for k in keys) for r in rows)]) + "\n"
    lines = [
        f"seed {report.seed}, {report.trials} trials, p = {report.p}",
        f"{'lot':>4} {'A_k':>6} {'N_k':>6} {'mean':>10} {'p*A':>10} {'std':>8} {'exp std':>8} {'P(over)':>9} {'exact':>9}",
    ]
    for r in report.lots:
        lines.append(
            f"{r.lot:>4} {r.permits:>6} {r.capacity:>6} {r.mean_arrivals:>10.3f} {r.expected_mean:>10.3f} "
            f"{r.std_arrivals:>8.3f} {r.expected_std:>8.3f} {r.overflow_probability:>9.5f} {r.exact_overflow:>9.5f}"
        )
    return "\n".join(lines) + "\n"


def _run(args) -> tuple[int, str]:
    instance = _load(args)
    report = validate_instance(instance)
    if args.command == "validate":
        return (EXIT_OK if report.ok else EXIT_INVALID), _render_validation(report, args.output_format)
    for w in report.warnings:
        _err(f"warning: {w}")
    if not report.ok:
        for e in report.errors:
            _err(f"error: {e}")
        return EXIT_INVALID, ""

    issued = _permits(args, instance)
    if args.command == "permits":
        return EXIT_OK, ingest.write_permits(issued, args.output_format, instance)
    if args.command == "simulate":
        if args.trials < 1:
            raise _UsageError("--trials must be at least 1")
        result = simulate.simulate_arrivals(issued, instance, args.trials, args.seed)
        return EXIT_OK, _render_simulation(result, args.output_format)

    if args.command == "oracle":
        plan = oracle.brute_force_optimum(
            instance, issued, args.reserved_mode, oracle.EnumerationBudget(args.max_states)
        )
    else:
        network = allocate.build_network(instance, issued, args.reserved_mode)
        outcome = allocate.solve_min_cost_flow(network)
        problems = allocate.certificate_violations(network, outcome.flows, outcome.potentials)
        if problems:
            for prob in problems:
                _err(f"certificate: {prob}")
            return EXIT_INVALID, ""
        plan = outcome.plan
        _err(
            f"optimal Z = {plan.objective}; certificate verified; "
            f"{outcome.iterations} augmentations in {outcome.wall_time * 1000:.1f} ms"
        )
    check = allocate.check_plan(instance, issued, plan)
    if not check.ok:
        for v in check.violations:
            _err(f"plan check: {v}")
        return EXIT_INVALID, ""
    return EXIT_OK, ingest.write_plan(plan, args.output_format, instance)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        _err(str(exc))
        return EXIT_IO
    try:
        status, text = _run(args)
    except _UsageError as exc:
        _err(str(exc))
        return EXIT_IO
    except (OSError, InstanceParseError, json.JSONDecodeError, KeyError) as exc:
        _err(str(exc))
        return EXIT_IO
    except InstanceValidationError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except (Infeasible, PermitMismatch, BudgetExceeded, PermitError) as exc:
        _err(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except ParkallocError as exc:
        _err(str(exc))
        return EXIT_INVALID
    if text:
        if args.output_path:
            try:
                with open(args.output_path, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                _err(str(exc))
                return EXIT_IO
        else:
            sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
