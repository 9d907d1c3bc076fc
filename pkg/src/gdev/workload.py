"""Workload specifications and the runtime that opens per-config handles.

Two kinds of workload exist: the builtin matrix-multiply microkernel
(desk-scale stand-in with exact FLOP accounting) and external processes
speaking the stdio JSON protocol. A handle is bound to one run configuration,
exposes ``run_iterations(n, phase)`` returning self-timed latencies in
milliseconds, and must be closed after use.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidPlan, UnknownModel
from .model import RunConfig

WARMUP_PHASE = "warmup"
MEASURE_PHASE = "measure"

BUILTIN_GEMM = "builtin-gemm"
EXTERNAL = "external"


@dataclass(frozen=True)
class WorkloadSpec:
    """How to run one model id: builtin kernel dimensions or an external
    command line."""

    model_id: str
    kind: str
    dims: tuple[int, int, int] | None = None
    element_bytes: int = 4
    command: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.model_id:
            raise InvalidPlan("workload model_id must be non-empty")
        if self.kind == BUILTIN_GEMM:
            if self.dims is None or len(self.dims) != 3:
                raise InvalidPlan("builtin-gemm workloads need dims (m, k, n)")
            dims = tuple(int(d) for d in self.dims)
            object.__setattr__(self, "dims", dims)
            if any(d < 1 for d in dims):
                raise InvalidPlan(f"builtin-gemm dims must be >= 1, got {dims}")
            if self.element_bytes not in (4, 8):
                raise InvalidPlan(
                    f"builtin-gemm element width must be 4 or 8 bytes, got {self.element_bytes}"
                )
        elif self.kind == EXTERNAL:
            if not self.command:
                raise InvalidPlan("external workloads need a non-empty command")
            object.__setattr__(self, "command", tuple(str(c) for c in self.command))
        else:
            raise InvalidPlan(f"unknown workload kind {self.kind!r}")


class WorkloadRuntime:
    """Opens a workload handle for each run configuration from registered
    specs. Handles are single-config and not shareable across threads."""

    def __init__(self, specs, *, handshake_timeout_s: float = 30.0,
                 iteration_timeout_s: float = 600.0):
        self._specs: dict[str, WorkloadSpec] = {}
        for spec in specs:
            if spec.model_id in self._specs:
                raise InvalidPlan(f"duplicate workload spec for {spec.model_id!r}")
            self._specs[spec.model_id] = spec
        self.handshake_timeout_s = handshake_timeout_s
        self.iteration_timeout_s = iteration_timeout_s

    def spec_for(self, model_id: str) -> WorkloadSpec:
        try:
            return self._specs[model_id]
        except KeyError:
            raise UnknownModel(f"no workload registered for model {model_id!r}") from None

    def open(self, config: RunConfig):
        from .external import ExternalWorkload
        from .gemm import GemmWorkload

        spec = self.spec_for(config.model_id)
        if spec.kind == BUILTIN_GEMM:
            return GemmWorkload(spec, config)
        return ExternalWorkload(
            spec,
            config,
            handshake_timeout_s=self.handshake_timeout_s,
            iteration_timeout_s=self.iteration_timeout_s,
        )
