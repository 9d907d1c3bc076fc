"""Analytical roofline model.

An interpretive estimator: attainable performance is min(peak compute,
operational intensity x peak bandwidth), the ridge point is where the two
ceilings meet, and workloads are classified by where their operational
intensity sits relative to that ridge. Platform numbers are user-supplied
profile inputs, never measured here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NonpositiveInput

MEMORY_BOUND = "memory-bound"
RIDGE = "ridge"
COMPUTE_BOUND = "compute-bound"

DEFAULT_RIDGE_BAND = 0.10

CACHE_RESIDENT = "resident"
CACHE_STREAMING = "streaming"


def ridge_point(pmax_gflops: float, bmax_gbps: float) -> float:
    """Operational intensity (FLOPs/byte) where the compute and bandwidth
    ceilings intersect."""
    if pmax_gflops <= 0 or bmax_gbps <= 0:
        raise NonpositiveInput("peak compute and bandwidth must be > 0")
    return pmax_gflops / bmax_gbps


@dataclass(frozen=True)
class PlatformRoofline:
    """Peak compute (GFLOP/s), sustained bandwidth (GB/s), and the derived
    ridge point for one platform; optional last-level cache capacity."""

    name: str
    pmax_gflops: float
    bmax_gbps: float
    llc_bytes: int | None = None

    def __post_init__(self):
        if self.pmax_gflops <= 0 or self.bmax_gbps <= 0:
            raise NonpositiveInput("peak compute and bandwidth must be > 0")
        if self.llc_bytes is not None and self.llc_bytes <= 0:
            raise NonpositiveInput("llc_bytes must be > 0 when given")

    @property
    def ridge_oi(self) -> float:
        return ridge_point(self.pmax_gflops, self.bmax_gbps)


@dataclass(frozen=True)
class WorkloadProfile:
    """Per-image compute (GFLOPs) and data moved (GB); their ratio is the
    operational intensity."""

    flops_per_image_gflops: float
    data_moved_per_image_gb: float
    weights_bytes: int | None = None

    def __post_init__(self):
        if self.flops_per_image_gflops <= 0 or self.data_moved_per_image_gb <= 0:
            raise NonpositiveInput("per-image FLOPs and data moved must be > 0")

    @property
    def oi(self) -> float:
        return self.flops_per_image_gflops / self.data_moved_per_image_gb


@dataclass(frozen=True)
class RegimeVerdict:
    oi: float
    regime: str
    tau: float


def attainable(oi: float, platform: PlatformRoofline) -> float:
    """Attainable GFLOP/s at the given operational intensity: the bandwidth
    slope below the ridge, the compute ceiling above it."""
    if oi <= 0:
        raise NonpositiveInput(f"operational intensity must be > 0, got {oi}")
    return min(platform.pmax_gflops, oi * platform.bmax_gbps)


def classify_regime(
    profile: WorkloadProfile,
    platform: PlatformRoofline,
    tau: float = DEFAULT_RIDGE_BAND,
) -> RegimeVerdict:
    """Place a workload relative to the platform's ridge point with a
    symmetric near-ridge band of width ``tau``."""
    if tau < 0:
        raise NonpositiveInput(f"tau must be >= 0, got {tau}")
    oi = profile.oi
    ridge = platform.ridge_oi
    if oi < ridge * (1.0 - tau):
        regime = MEMORY_BOUND
    elif oi > ridge * (1.0 + tau):
        regime = COMPUTE_BOUND
    else:
        regime = RIDGE
    return RegimeVerdict(oi=oi, regime=regime, tau=tau)


def memory_bound_threshold(flops_per_image_gflops: float, ridge_oi: float) -> float:
    """Data moved per image (GB) above which the workload drops below the
    ridge into the memory-bound regime."""
    if flops_per_image_gflops <= 0 or ridge_oi <= 0:
        raise NonpositiveInput("per-image FLOPs and ridge point must be > 0")
    return flops_per_image_gflops / ridge_oi


def cache_residency(weights_bytes: int, llc_bytes: int) -> str:
    """Whether a model's weight footprint fits in the last-level cache."""
    if weights_bytes <= 0 or llc_bytes <= 0:
        raise NonpositiveInput("weights and cache capacity must be > 0")
    return CACHE_RESIDENT if weights_bytes <= llc_bytes else CACHE_STREAMING
