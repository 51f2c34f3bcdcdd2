"""Monte-Carlo check of permit over-issuance.

Each simulated day, every permit holder of a lot independently shows up with
probability ``p``. Arrivals are drawn as explicit coin flips. Random streams
are numpy ``PCG64`` generators, one per lot, spawned from
``SeedSequence(seed)``; the same seed therefore gives the same report no
matter how lots are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance
from .permits import PermitIssuance

_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class LotOverflow:
    lot: int
    permits: int
    capacity: int
    trials: int
    mean_arrivals: float
    std_arrivals: float
    overflow_probability: float
    expected_mean: float
    expected_std: float
    exact_overflow: float


@dataclass(frozen=True)
class OverflowReport:
    seed: int
    trials: int
    p: float
    lots: tuple[LotOverflow, ...]


def exact_binomial_tail(n: int, p: float, threshold: int) -> float:
    """``P(X > threshold)`` for ``X ~ Binomial(n, p)``, summed in log space."""
    if threshold >= n:
        return 0.0
    if threshold < 0:
        return 1.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    lgn = math.lgamma(n + 1)
    logs = [
        lgn - math.lgamma(x + 1) - math.lgamma(n - x + 1) + x * lp + (n - x) * lq
        for x in range(threshold + 1, n + 1)
    ]
    top = max(logs)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in logs))


def _arrivals(rng: np.random.Generator, holders: int, p: float, trials: int) -> np.ndarray:
    out = np.empty(trials, dtype=np.int64)
    if holders == 0:
        out[:] = 0
        return out
    rows = max(1, _CHUNK_CELLS // holders)
    for start in range(0, trials, rows):
        stop = min(trials, start + rows)
        flips = rng.random((stop - start, holders)) < p
        out[start:stop] = flips.sum(axis=1)
    return out


def simulate_arrivals(
    permits: PermitIssuance, instance: ProblemInstance, trials: int = 100_000, seed: int = 0
) -> OverflowReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    p = instance.arrival_probability
    n = len(instance.lots)
    streams = np.random.SeedSequence(seed).spawn(n)
    lots = []
    for k, lot in enumerate(instance.lots):
        a = permits.per_lot[k]
        cap = lot.total_capacity
        x = _arrivals(np.random.Generator(np.random.PCG64(streams[k])), a, p, trials)
        s1 = int(x.sum())
        s2 = int((x * x).sum())
        # exact integer moments, sample (n-1) variance
        var = (s2 * trials - s1 * s1) / (trials * (trials - 1)) if trials > 1 else 0.0
        lots.append(
            LotOverflow(
                lot=lot.id,
                permits=a,
                capacity=cap,
                trials=trials,
                mean_arrivals=s1 / trials,
                std_arrivals=math.sqrt(max(var, 0.0)),
                overflow_probability=int((x > cap).sum()) / trials,
                expected_mean=p * a,
                expected_std=math.sqrt(p * (1.0 - p) * a),
                exact_overflow=exact_binomial_tail(a, p, cap),
            )
        )
    return OverflowReport(seed, trials, p, tuple(lots))
