"""Sweep planning and execution.

A plan expands the matrix into an explicit run order: sweep index outermost,
then model, thread count, batch size, and repetition innermost. Keeping the
repetitions adjacent means back-to-back runs of the same configuration land
in the same cache and frequency conditions; putting sweeps outermost spreads
each configuration across the whole session so slow drift shows up as
between-sweep variance instead of biasing one cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BenchmarkError, Timeout, ValidationError
from .model import RunConfig, RunRecord, SweepMatrix, validate_matrix
from .workload import WorkloadRuntime


@dataclass(frozen=True)
class SweepPlan:
    matrix: SweepMatrix
    configs: tuple[RunConfig, ...]

    def __post_init__(self):
        expected = self.matrix.total_executions
        if len(self.configs) != expected:
            raise ValidationError(
                f"plan has {len(self.configs)} configs, matrix implies {expected}"
            )


@dataclass(frozen=True)
class FailureRecord:
    config: RunConfig
    kind: str
    message: str


@dataclass
class Dataset:
    records: list[RunRecord] = field(default_factory=list)
    failures: list[FailureRecord] = field(default_factory=list)


def plan_sweep(matrix: SweepMatrix, core_list: tuple[int, ...] | None = None) -> SweepPlan:
    """Expand a validated matrix into an ordered, deterministic plan."""
    validate_matrix(matrix)
    configs = []
    for sweep in range(1, matrix.sweep_count + 1):
        for model in matrix.models:
            for threads in matrix.thread_counts:
                for batch in matrix.batch_sizes:
                    for rep in range(1, matrix.repetitions + 1):
                        configs.append(
                            RunConfig(
                                model_id=model,
                                batch_size=batch,
                                threads=threads,
                                repetition_index=rep,
                                sweep_index=sweep,
                                core_list=core_list,
                            )
                        )
    return SweepPlan(matrix=matrix, configs=tuple(configs))


def execute_config(
    config: RunConfig,
    handle,
    *,
    warmup_iterations: int,
    measure_iterations: int,
    iteration_timeout_s: float = 600.0,
) -> RunRecord:
    """Run one configuration to completion on an open workload handle."""
    warmup = []
    if warmup_iterations:
        warmup = handle.run_iterations(warmup_iterations, "warmup")
    measured = handle.run_iterations(measure_iterations, "measure")
    # Self-timed workloads report after the fact, so the ceiling is checked
    # against the returned values rather than by killing mid-iteration.
    ceiling_ms = iteration_timeout_s * 1000.0
    worst = max(measured)
    if worst > ceiling_ms:
        raise Timeout(
            f"iteration took {worst / 1000.0:.1f} s, ceiling {iteration_timeout_s:.1f} s"
        )
    return RunRecord(
        config=config,
        warmup_latencies_ms=tuple(warmup),
        measured_latencies_ms=tuple(measured),
    )


def execute_sweep(
    plan: SweepPlan,
    runtime: WorkloadRuntime,
    *,
    warmup_iterations: int | None = None,
    measure_iterations: int | None = None,
    continue_on_error: bool = False,
    iteration_timeout_s: float = 600.0,
) -> Dataset:
    """Run every configuration in plan order, sequentially.

    A failure aborts the session unless continue_on_error is set, in which
    case it is logged to the dataset's failure list and the sweep moves on.
    """
    if warmup_iterations is None:
        warmup_iterations = plan.matrix.warmup_iterations
    if measure_iterations is None:
        measure_iterations = plan.matrix.measure_iterations
    dataset = Dataset()
    for config in plan.configs:
        try:
            with runtime.open(config) as handle:
                record = execute_config(
                    config,
                    handle,
                    warmup_iterations=warmup_iterations,
                    measure_iterations=measure_iterations,
                    iteration_timeout_s=iteration_timeout_s,
                )
        except BenchmarkError as exc:
            if not continue_on_error:
                raise
            dataset.failures.append(
                FailureRecord(config=config, kind=type(exc).__name__, message=str(exc))
            )
            continue
        dataset.records.append(record)
    return dataset
