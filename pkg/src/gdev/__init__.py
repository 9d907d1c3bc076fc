"""Batch/thread sweep benchmarking and saturation analysis for CPU inference."""

__version__ = "0.1.0"

from .analysis import (
    CliffReport,
    SaturationReport,
    SpeedupCurve,
    ThroughputCurve,
    detect_cliff,
    detect_saturation,
    speedup_curve,
    tail_amplification,
    throughput,
    throughput_curve,
)
from .errors import BenchmarkError
from .manifest import RunManifest, load_manifest
from .model import AggregatedResult, RunConfig, RunRecord, SweepMatrix, validate_matrix
from .roofline import PlatformRoofline, WorkloadProfile, classify_regime, ridge_point
from .stats import aggregate, aggregate_dataset, median, percentile, sample_stddev
from .sweep import Dataset, SweepPlan, execute_sweep, plan_sweep
from .workload import WorkloadRuntime, WorkloadSpec

__all__ = [
    "__version__",
    "AggregatedResult",
    "BenchmarkError",
    "CliffReport",
    "Dataset",
    "PlatformRoofline",
    "RunConfig",
    "RunManifest",
    "RunRecord",
    "SaturationReport",
    "SpeedupCurve",
    "SweepMatrix",
    "SweepPlan",
    "ThroughputCurve",
    "WorkloadProfile",
    "WorkloadRuntime",
    "WorkloadSpec",
    "aggregate",
    "aggregate_dataset",
    "classify_regime",
    "detect_cliff",
    "detect_saturation",
    "execute_sweep",
    "load_manifest",
    "median",
    "percentile",
    "plan_sweep",
    "ridge_point",
    "sample_stddev",
    "speedup_curve",
    "tail_amplification",
    "throughput",
    "throughput_curve",
    "validate_matrix",
]
