"""Exact permit issuance and parking allocation for campus lots with reserved spaces."""

from .allocate import build_network, check_plan, solve, solve_min_cost_flow
from .core import AllocationPlan, ProblemInstance, derived_totals, validate_instance
from .ingest import load_fixture, load_instance, parse_instance, write_plan
from .oracle import EnumerationBudget, brute_force_optimum
from .permits import PermitIssuance, build_quadratic, compute_permits, solve_quadratic
from .simulate import exact_binomial_tail, simulate_arrivals

__all__ = [
    "AllocationPlan",
    "EnumerationBudget",
    "PermitIssuance",
    "ProblemInstance",
    "brute_force_optimum",
    "build_network",
    "build_quadratic",
    "check_plan",
    "compute_permits",
    "derived_totals",
    "exact_binomial_tail",
    "load_fixture",
    "load_instance",
    "parse_instance",
    "simulate_arrivals",
    "solve",
    "solve_min_cost_flow",
    "solve_quadratic",
    "validate_instance",
    "write_plan",
]
