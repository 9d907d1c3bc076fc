"""Exception hierarchy shared across the harness.

Every failure the harness raises on purpose derives from ``BenchmarkError``,
so callers (and the CLI) can catch one base class. I/O failures from the
filesystem are left as the builtin ``OSError``.
"""


class BenchmarkError(Exception):
    """Base class for all harness errors."""


class ValidationError(BenchmarkError):
    """A manifest or experiment plan violates its contract."""


class InvalidPlan(ValidationError):
    """A sweep matrix field violates an invariant (empty, duplicate, order...)."""


class ParseError(BenchmarkError):
    """A manifest file is missing, unreadable, or structurally malformed."""


class WorkloadFailure(BenchmarkError):
    """A workload reported an error or died; carries its diagnostic."""


class Timeout(BenchmarkError):
    """The per-iteration wall-clock ceiling was exceeded."""


class SpawnFailure(BenchmarkError):
    """An external workload process could not be started."""


class HandshakeFailure(BenchmarkError):
    """No valid ready message arrived from an external workload in time."""


class ProtocolError(BenchmarkError):
    """An external workload sent a malformed or unexpected message."""


class UnsupportedPlatform(BenchmarkError):
    """The host offers no CPU-affinity API; runs proceed unpinned."""


class InvalidCore(BenchmarkError):
    """An affinity mask names a CPU id the host does not have."""


class AllocationFailure(BenchmarkError):
    """The builtin kernel's working set exceeds available memory."""


class EmptyInput(BenchmarkError):
    """A statistic or report was requested over zero samples."""


class InvalidPercentile(BenchmarkError):
    """Percentile rank outside (0, 100]."""


class InsufficientSamples(BenchmarkError):
    """Sample standard deviation needs at least two samples."""


class KeyMismatch(BenchmarkError):
    """Records with different (model, batch, threads) keys were pooled."""


class MissingBaseline(BenchmarkError):
    """Speedup requested without a single-thread measurement."""


class NonpositiveLatency(BenchmarkError):
    """Throughput requested for a latency that is not > 0."""


class OrderViolation(BenchmarkError):
    """P99 below the median signals a bug upstream of the analysis."""


class NonpositiveInput(BenchmarkError):
    """A roofline quantity that must be positive was not."""


class UnknownModel(BenchmarkError):
    """A model id without a registered workload or any aggregated results."""
