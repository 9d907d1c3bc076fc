"""Robust latency statistics.

Median follows the classic rule (middle order statistic, or the mean of the
two central ones for even counts). Percentiles use the nearest-rank method,
which is exactly reproducible and always sample-valued. Standard deviation is
the Bessel-corrected sample estimate.
"""

from __future__ import annotations

import math
import statistics
from collections.abc import Iterable, Sequence

from .errors import EmptyInput, InsufficientSamples, InvalidPercentile, KeyMismatch
from .model import AggregatedResult, RunRecord


def median(values_ms: Sequence[float]) -> float:
    """Median of a non-empty sample set."""
    if len(values_ms) == 0:
        raise EmptyInput("median of an empty sample set")
    return statistics.median(values_ms)


def percentile(values_ms: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.

    ``p`` must lie in (0, 100]; p=100 is the maximum.
    """
    if len(values_ms) == 0:
        raise EmptyInput("percentile of an empty sample set")
    if not (0.0 < p <= 100.0):
        raise InvalidPercentile(f"percentile rank must be in (0, 100], got {p}")
    ordered = sorted(values_ms)
    # p * n first: exact for integer ranks, so rank boundaries never wobble.
    rank = math.ceil(p * len(ordered) / 100.0)
    return ordered[rank - 1]


def sample_stddev(values_ms: Sequence[float]) -> float:
    """Bessel-corrected (n-1) sample standard deviation; needs n >= 2."""
    if len(values_ms) < 2:
        raise InsufficientSamples(
            f"sample stddev needs at least 2 samples, got {len(values_ms)}"
        )
    return statistics.stdev(values_ms)


def aggregate(records: Iterable[RunRecord]) -> AggregatedResult:
    """Pool every measured latency of one (model, batch, threads) key across
    its repetitions and sweeps into a single distribution, and summarize it.

    With a single pooled sample the spread is reported as 0.0 (the sample
    stddev is undefined at n=1).
    """
    records = list(records)
    if not records:
        raise EmptyInput("aggregate of zero records")
    key = records[0].config.key
    for r in records[1:]:
        if r.config.key != key:
            raise KeyMismatch(f"cannot pool {r.config.key} into {key}")
    pooled: list[float] = []
    for r in records:
        pooled.extend(r.measured_latencies_ms)
    med = median(pooled)
    return AggregatedResult(
        model_id=key[0],
        batch_size=key[1],
        threads=key[2],
        median_latency_ms=med,
        p99_latency_ms=percentile(pooled, 99),
        stddev_ms=sample_stddev(pooled) if len(pooled) >= 2 else 0.0,
        throughput_ips=key[1] / (med / 1000.0),
        n_samples=len(pooled),
    )


def aggregate_dataset(records: Iterable[RunRecord]) -> list[AggregatedResult]:
    """Group records by key (in first-appearance order) and aggregate each."""
    groups: dict[tuple[str, int, int], list[RunRecord]] = {}
    for r in records:
        groups.setdefault(r.config.key, []).append(r)
    return [aggregate(g) for g in groups.values()]
