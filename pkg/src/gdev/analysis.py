"""Scaling metrics derived from aggregated results.

Covers throughput-vs-batch curves, multi-thread speedup, saturation-batch
detection, oversubscription cliff detection, and tail amplification. All
functions are pure and operate on immutable aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    EmptyInput,
    KeyMismatch,
    MissingBaseline,
    NonpositiveLatency,
    OrderViolation,
)
from .model import AggregatedResult

DEFAULT_SATURATION_EPSILON = 0.01
DEFAULT_CLIFF_THRESHOLD = 0.10


def throughput(batch_size: int, median_latency_ms: float) -> float:
    """Images per second for a batch completing in the given median latency."""
    if median_latency_ms <= 0:
        raise NonpositiveLatency(f"latency must be > 0 ms, got {median_latency_ms}")
    return batch_size / (median_latency_ms / 1000.0)


def tail_amplification(median_ms: float, p99_ms: float) -> float:
    """Ratio p99/median (>= 1); quantifies how far the tail strays."""
    if median_ms <= 0:
        raise NonpositiveLatency(f"median must be > 0 ms, got {median_ms}")
    if p99_ms < median_ms:
        raise OrderViolation(f"p99 {p99_ms} below median {median_ms}")
    return p99_ms / median_ms


def relative_degradation(peak_ips: float, trough_ips: float) -> float:
    """Fractional throughput loss of ``trough_ips`` relative to ``peak_ips``."""
    if peak_ips <= 0:
        raise NonpositiveLatency(f"peak throughput must be > 0, got {peak_ips}")
    return (peak_ips - trough_ips) / peak_ips


@dataclass(frozen=True)
class CurvePoint:
    batch_size: int
    throughput_ips: float
    median_latency_ms: float


@dataclass(frozen=True)
class ThroughputCurve:
    """Throughput over increasing batch size for one model at a fixed thread
    count."""

    model_id: str
    threads: int
    points: tuple[CurvePoint, ...]


@dataclass(frozen=True)
class SpeedupPoint:
    threads: int
    speedup: float


@dataclass(frozen=True)
class SpeedupCurve:
    """Single-thread-relative speedup over thread count for one model at a
    fixed batch size. Always contains threads=1 with speedup exactly 1."""

    model_id: str
    batch_size: int
    points: tuple[SpeedupPoint, ...]


@dataclass(frozen=True)
class SaturationReport:
    """Where marginal throughput gain from batching first drops below the
    threshold; ``saturation_batch`` is None when the curve never flattens in
    the tested range."""

    model_id: str
    threads: int
    epsilon: float
    saturation_batch: int | None
    gains: tuple[float, ...]


@dataclass(frozen=True)
class CliffReport:
    """Peak-vs-trough throughput over the thread axis; a cliff is flagged
    when the trough at the highest tested thread count falls more than the
    threshold below the peak."""

    model_id: str
    batch_size: int
    peak_threads: int
    peak_ips: float
    trough_threads: int
    trough_ips: float
    degradation: float
    cliff: bool


def throughput_curve(results: list[AggregatedResult]) -> ThroughputCurve:
    """Order one model/thread-count group of aggregates by batch size."""
    if not results:
        raise EmptyInput("throughput curve of zero results")
    model_id, threads = results[0].model_id, results[0].threads
    for r in results[1:]:
        if (r.model_id, r.threads) != (model_id, threads):
            raise KeyMismatch("throughput curve mixes (model, threads) groups")
    ordered = sorted(results, key=lambda r: r.batch_size)
    points = tuple(
        CurvePoint(r.batch_size, r.throughput_ips, r.median_latency_ms) for r in ordered
    )
    return ThroughputCurve(model_id=model_id, threads=threads, points=points)


def speedup_curve(results: list[AggregatedResult]) -> SpeedupCurve:
    """Speedup(t) = median latency at 1 thread / median latency at t threads,
    over one model/batch group. Raises MissingBaseline without a t=1 result."""
    if not results:
        raise EmptyInput("speedup curve of zero results")
    model_id, batch_size = results[0].model_id, results[0].batch_size
    for r in results[1:]:
        if (r.model_id, r.batch_size) != (model_id, batch_size):
            raise KeyMismatch("speedup curve mixes (model, batch) groups")
    by_threads = {r.threads: r for r in results}
    if 1 not in by_threads:
        raise MissingBaseline(f"no single-thread result for {model_id} batch {batch_size}")
    baseline = by_threads[1].median_latency_ms
    points = tuple(
        SpeedupPoint(t, baseline / by_threads[t].median_latency_ms)
        for t in sorted(by_threads)
    )
    return SpeedupCurve(model_id=model_id, batch_size=batch_size, points=points)


def detect_saturation(
    curve: ThroughputCurve, epsilon: float = DEFAULT_SATURATION_EPSILON
) -> SaturationReport:
    """Saturation batch = smallest batch size whose step to the next batch
    gains strictly less than ``epsilon`` relative throughput."""
    gains = tuple(
        (b.throughput_ips - a.throughput_ips) / a.throughput_ips
        for a, b in zip(curve.points, curve.points[1:])
    )
    saturation_batch = None
    for point, gain in zip(curve.points, gains):
        if gain < epsilon:
            saturation_batch = point.batch_size
            break
    return SaturationReport(
        model_id=curve.model_id,
        threads=curve.threads,
        epsilon=epsilon,
        saturation_batch=saturation_batch,
        gains=gains,
    )


def detect_cliff(
    results: list[AggregatedResult], cliff_threshold: float = DEFAULT_CLIFF_THRESHOLD
) -> CliffReport:
    """Compare argmax throughput over threads (smallest thread count on ties)
    against the highest tested thread count, for one model/batch group."""
    if not results:
        raise EmptyInput("cliff detection over zero results")
    model_id, batch_size = results[0].model_id, results[0].batch_size
    for r in results[1:]:
        if (r.model_id, r.batch_size) != (model_id, batch_size):
            raise KeyMismatch("cliff detection mixes (model, batch) groups")
    ordered = sorted(results, key=lambda r: r.threads)
    peak = max(ordered, key=lambda r: (r.throughput_ips, -r.threads))
    trough = ordered[-1]
    degradation = relative_degradation(peak.throughput_ips, trough.throughput_ips)
    return CliffReport(
        model_id=model_id,
        batch_size=batch_size,
        peak_threads=peak.threads,
        peak_ips=peak.throughput_ips,
        trough_threads=trough.threads,
        trough_ips=trough.throughput_ips,
        degradation=degradation,
        cliff=degradation > cliff_threshold,
    )
