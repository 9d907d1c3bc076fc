"""Core domain types shared by every module.

All types are immutable after construction and safe to share across threads.
Latencies are wall-clock milliseconds as floats everywhere; conversion to
seconds happens only inside the throughput formula.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .errors import InvalidPlan

DEFAULT_WARMUP_ITERATIONS = 20
DEFAULT_MEASURE_ITERATIONS = 100


def _as_tuple(value):
    return value if isinstance(value, tuple) else tuple(value)


@dataclass(frozen=True)
class SweepMatrix:
    """The experiment plan: which models, batch sizes and thread counts to
    sweep, how often to repeat each configuration, and how many iterations
    each execution warms up and measures."""

    models: tuple[str, ...]
    batch_sizes: tuple[int, ...]
    thread_counts: tuple[int, ...]
    repetitions: int
    sweep_count: int
    warmup_iterations: int = DEFAULT_WARMUP_ITERATIONS
    measure_iterations: int = DEFAULT_MEASURE_ITERATIONS

    def __post_init__(self):
        object.__setattr__(self, "models", _as_tuple(self.models))
        object.__setattr__(self, "batch_sizes", _as_tuple(self.batch_sizes))
        object.__setattr__(self, "thread_counts", _as_tuple(self.thread_counts))

    @property
    def unique_configurations(self) -> int:
        return len(self.models) * len(self.batch_sizes) * len(self.thread_counts)

    @property
    def total_executions(self) -> int:
        return self.unique_configurations * self.repetitions * self.sweep_count


def _check_positive_ints(name: str, values, strictly_increasing: bool = False):
    if len(values) == 0:
        raise InvalidPlan(f"{name} must be non-empty")
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool):
            raise InvalidPlan(f"{name} must contain integers, got {v!r}")
        if v < 1:
            raise InvalidPlan(f"{name} must contain positive integers, got {v}")
    if strictly_increasing:
        for a, b in zip(values, values[1:]):
            if b <= a:
                raise InvalidPlan(f"{name} must be strictly increasing, got {a} before {b}")


def validate_matrix(matrix: SweepMatrix) -> SweepMatrix:
    """Return ``matrix`` unchanged if every invariant holds; otherwise raise
    InvalidPlan naming the first violated invariant. Idempotent."""
    if len(matrix.models) == 0:
        raise InvalidPlan("models must be non-empty")
    for m in matrix.models:
        if not isinstance(m, str) or not m:
            raise InvalidPlan(f"models must be non-empty strings, got {m!r}")
    if len(set(matrix.models)) != len(matrix.models):
        raise InvalidPlan("models must be unique")
    _check_positive_ints("batch_sizes", matrix.batch_sizes, strictly_increasing=True)
    _check_positive_ints("thread_counts", matrix.thread_counts, strictly_increasing=True)
    if not isinstance(matrix.repetitions, int) or matrix.repetitions < 1:
        raise InvalidPlan(f"repetitions must be a positive integer, got {matrix.repetitions!r}")
    if not isinstance(matrix.sweep_count, int) or matrix.sweep_count < 1:
        raise InvalidPlan(f"sweep_count must be a positive integer, got {matrix.sweep_count!r}")
    if not isinstance(matrix.warmup_iterations, int) or matrix.warmup_iterations < 0:
        raise InvalidPlan(
            f"warmup_iterations must be a non-negative integer, got {matrix.warmup_iterations!r}"
        )
    if not isinstance(matrix.measure_iterations, int) or matrix.measure_iterations < 1:
        raise InvalidPlan(
            f"measure_iterations must be a positive integer, got {matrix.measure_iterations!r}"
        )
    return matrix


@dataclass(frozen=True)
class RunConfig:
    """One point of the sweep: a model at a batch size and intra-op thread
    count, tagged with its 1-based repetition and sweep indices."""

    model_id: str
    batch_size: int
    threads: int
    repetition_index: int
    sweep_index: int
    core_list: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidPlan(f"batch_size must be >= 1, got {self.batch_size}")
        if self.threads < 1:
            raise InvalidPlan(f"threads must be >= 1, got {self.threads}")
        if self.repetition_index < 1 or self.sweep_index < 1:
            raise InvalidPlan("repetition_index and sweep_index are 1-based")
        if self.core_list is not None:
            cores = _as_tuple(self.core_list)
            object.__setattr__(self, "core_list", cores)
            if len(set(cores)) != len(cores):
                raise InvalidPlan("core_list ids must be unique")
            if any(c < 0 for c in cores):
                raise InvalidPlan("core_list ids must be non-negative")

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.model_id, self.batch_size, self.threads)


def _check_latencies(name: str, values) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"{name} must be positive finite milliseconds, got {v}")
    return out


@dataclass(frozen=True)
class RunRecord:
    """Per-iteration wall-clock latencies from one execution of one config.

    Warm-up latencies are kept for diagnostics but never enter statistics.
    ``timestamp`` is the wall-clock start in epoch seconds.
    """

    config: RunConfig
    warmup_latencies_ms: tuple[float, ...]
    measured_latencies_ms: tuple[float, ...]
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        object.__setattr__(
            self, "warmup_latencies_ms", _check_latencies("warmup latencies", self.warmup_latencies_ms)
        )
        object.__setattr__(
            self,
            "measured_latencies_ms",
            _check_latencies("measured latencies", self.measured_latencies_ms),
        )
        if len(self.measured_latencies_ms) == 0:
            raise ValueError("measured_latencies_ms must be non-empty")


@dataclass(frozen=True)
class AggregatedResult:
    """Statistics for one (model, batch, threads) key pooled over all of its
    executions. ``throughput_ips`` is batch / (median / 1000), computed once
    so consumers can reproduce it bit-for-bit."""

    model_id: str
    batch_size: int
    threads: int
    median_latency_ms: float
    p99_latency_ms: float
    stddev_ms: float
    throughput_ips: float
    n_samples: int

    def __post_init__(self):
        if self.p99_latency_ms < self.median_latency_ms:
            raise ValueError("p99 below median: order statistics violated")

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.model_id, self.batch_size, self.threads)
