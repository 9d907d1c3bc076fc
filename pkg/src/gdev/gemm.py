"""Builtin matrix-multiply microkernel.

One "image" is one m x k x n single-precision multiply; a batch is that many
independent multiplies against a shared weight matrix, mirroring the
activations-times-weights shape of CNN inference. Work is partitioned by
output rows across exactly the requested number of worker threads, each
running a blocked loop over row and k tiles. The process-wide BLAS pool is
pinned to one thread for the handle's lifetime so parallelism comes only
from those workers.

Operands are allocated once per configuration, not per iteration, so warm-up
iterations genuinely warm caches.
"""

from __future__ import annotations

import threading
import time

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import AllocationFailure
from .model import RunConfig
from .workload import WorkloadSpec

ROW_BLOCK = 64
K_BLOCK = 256


def flops_per_image(dims: tuple[int, int, int]) -> int:
    """Exact multiply-add count of one m x k x n product: 2*m*k*n."""
    m, k, n = dims
    return 2 * m * k * n


def _multiply_rows(a, w, out, lo: int, hi: int) -> None:
    """out[lo:hi] = a[lo:hi] @ w with blocked row and k loops."""
    k_total = a.shape[1]
    for r0 in range(lo, hi, ROW_BLOCK):
        r1 = min(r0 + ROW_BLOCK, hi)
        rows = a[r0:r1]
        acc = out[r0:r1]
        for k0 in range(0, k_total, K_BLOCK):
            k1 = min(k0 + K_BLOCK, k_total)
            if k0 == 0:
                np.matmul(rows[:, k0:k1], w[k0:k1], out=acc)
            else:
                acc += rows[:, k0:k1] @ w[k0:k1]


class GemmWorkload:
    """Handle for one (batch, threads) configuration of the builtin kernel."""

    def __init__(self, spec: WorkloadSpec, config: RunConfig, *, seed: int = 12345):
        m, k, n = spec.dims
        self.spec = spec
        self.config = config
        self._dims = (m, k, n)
        self._threads = config.threads
        dtype = np.float32 if spec.element_bytes == 4 else np.float64
        rng = np.random.default_rng(seed)
        rows = config.batch_size * m
        try:
            self._a = rng.random((rows, k), dtype=dtype)
            self._w = rng.random((k, n), dtype=dtype)
            self._c = np.zeros((rows, n), dtype=dtype)
        except MemoryError as exc:
            raise AllocationFailure(
                f"gemm working set for dims {spec.dims} batch {config.batch_size} "
                f"exceeds memory"
            ) from exc
        self._limits = threadpool_limits(limits=1, user_api="blas")

    @property
    def flops_per_image(self) -> int:
        return flops_per_image(self._dims)

    @property
    def activations(self):
        """Input operand viewed per image: (batch, m, k)."""
        m, k, _ = self._dims
        return self._a.reshape(self.config.batch_size, m, k)

    @property
    def weights(self):
        return self._w

    @property
    def output(self):
        """Result of the last iteration viewed per image: (batch, m, n)."""
        m, _, n = self._dims
        return self._c.reshape(self.config.batch_size, m, n)

    def iterate(self) -> float:
        """Run the whole batch once across exactly ``threads`` workers and
        return the wall-clock milliseconds of the pass."""
        rows = self._a.shape[0]
        nthreads = self._threads
        base, extra = divmod(rows, nthreads)
        errors: list[BaseException] = []

        def worker(lo: int, hi: int) -> None:
            try:
                if lo < hi:
                    _multiply_rows(self._a, self._w, self._c, lo, hi)
            except BaseException as exc:  # surfaced after join
                errors.append(exc)

        bounds = []
        lo = 0
        for i in range(nthreads):
            hi = lo + base + (1 if i < extra else 0)
            bounds.append((lo, hi))
            lo = hi

        start = time.perf_counter()
        workers = [threading.Thread(target=worker, args=b) for b in bounds]
        for t in workers:
            t.start()
        for t in workers:
            t.join()
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        if errors:
            raise errors[0]
        return elapsed_ms

    def run_iterations(self, n: int, phase: str, timeout_s: float | None = None) -> list[float]:
        return [self.iterate() for _ in range(n)]

    def close(self) -> None:
        if self._limits is not None:
            self._limits.restore_original_limits()
            self._limits = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def gemm_iteration(spec: WorkloadSpec, batch: int, threads: int) -> float:
    """One-shot convenience: allocate, run a single pass, return its latency.

    The sweep engine holds a GemmWorkload instead so operands persist across
    a configuration's iterations.
    """
    config = RunConfig(
        model_id=spec.model_id, batch_size=batch, threads=threads,
        repetition_index=1, sweep_index=1,
    )
    with GemmWorkload(spec, config) as workload:
        return workload.iterate()
