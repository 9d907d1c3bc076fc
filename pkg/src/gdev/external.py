"""Client side of the external-workload wire protocol.

Messages are newline-delimited UTF-8 JSON objects over the child's stdin and
stdout, one object per line:

    harness  -> workload  {"type": "init", "model": id, "batch": b, "threads": t}
    workload -> harness   {"type": "ready", "model": id}
    harness  -> workload  {"type": "run", "phase": "warmup"|"measure", "iterations": n}
    workload -> harness   {"type": "latencies", "phase": same, "values_ms": [...]}
    harness  -> workload  {"type": "shutdown"}          (child exits 0)
    workload -> harness   {"type": "error", "message": text}   (any time)

Unknown fields are ignored; an unknown "type" is a protocol error. Latencies
are self-timed by the workload around each forward pass, so pipe transport
never inflates a measurement.
"""

from __future__ import annotations

import collections
import json
import subprocess
import threading
import time
from queue import Empty, Queue

from .errors import (
    HandshakeFailure,
    ProtocolError,
    SpawnFailure,
    Timeout,
    WorkloadFailure,
)
from .model import RunConfig
from .workload import WorkloadSpec

_EOF = object()
_STDERR_TAIL_LINES = 40


class ExternalWorkload:
    """One child process bound to one run configuration."""

    def __init__(
        self,
        spec: WorkloadSpec,
        config: RunConfig,
        *,
        handshake_timeout_s: float = 30.0,
        iteration_timeout_s: float = 600.0,
    ):
        self.spec = spec
        self.config = config
        self.iteration_timeout_s = iteration_timeout_s
        try:
            self._proc = subprocess.Popen(
                list(spec.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise SpawnFailure(f"cannot start {spec.command[0]!r}: {exc}") from exc
        self._lines: Queue = Queue()
        self._stderr_tail: collections.deque[str] = collections.deque(maxlen=_STDERR_TAIL_LINES)
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()
        self.ready_info = self._handshake(handshake_timeout_s)

    # -- pipe pumps -------------------------------------------------------

    def _pump_stdout(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _pump_stderr(self) -> None:
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    # -- protocol ---------------------------------------------------------

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise WorkloadFailure(f"workload pipe closed: {exc}{self._diagnostic()}") from exc

    def _diagnostic(self) -> str:
        if not self._stderr_tail:
            return ""
        return "; stderr: " + " | ".join(self._stderr_tail)

    def _receive(self, timeout_s: float) -> dict:
        deadline = time.monotonic() + timeout_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise Timeout(f"no reply from workload within {timeout_s:.1f} s")
            try:
                line = self._lines.get(timeout=min(remaining, 0.5))
            except Empty:
                continue
            if line is _EOF:
                code = self._proc.poll()
                raise WorkloadFailure(
                    f"workload exited (code {code}) mid-conversation{self._diagnostic()}"
                )
            if not line.strip():
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"malformed message {line!r}: {exc}") from exc
            if not isinstance(message, dict):
                raise ProtocolError(f"expected a JSON object, got {line!r}")
            if message.get("type") == "error":
                raise WorkloadFailure(
                    f"workload error: {message.get('message', '')}{self._diagnostic()}"
                )
            return message

    def _handshake(self, timeout_s: float) -> dict:
        init = {
            "type": "init",
            "model": self.config.model_id,
            "batch": self.config.batch_size,
            "threads": self.config.threads,
        }
        try:
            self._send(init)
            reply = self._receive(timeout_s)
        except (WorkloadFailure, ProtocolError, Timeout) as exc:
            self.close()
            raise HandshakeFailure(f"handshake failed: {exc}") from exc
        if reply.get("type") != "ready":
            self.close()
            raise HandshakeFailure(f"expected ready message, got {reply!r}")
        if reply.get("model") != self.config.model_id:
            self.close()
            raise HandshakeFailure(
                f"workload answered for model {reply.get('model')!r}, "
                f"asked for {self.config.model_id!r}"
            )
        return reply

    def run_iterations(self, n: int, phase: str, timeout_s: float | None = None) -> list[float]:
        """Ask the workload for ``n`` self-timed passes of ``phase`` and
        return exactly ``n`` latencies in milliseconds."""
        if timeout_s is None:
            # Bulk reply: the child times every pass before answering.
            timeout_s = self.iteration_timeout_s * max(n, 1) + 5.0
        self._send({"type": "run", "phase": phase, "iterations": n})
        reply = self._receive(timeout_s)
        if reply.get("type") != "latencies":
            raise ProtocolError(f"unknown message type {reply.get('type')!r}")
        if reply.get("phase") != phase:
            raise ProtocolError(
                f"phase mismatch: asked {phase!r}, got {reply.get('phase')!r}"
            )
        values = reply.get("values_ms")
        if not isinstance(values, list):
            raise ProtocolError(f"values_ms missing or not a list in {reply!r}")
        if len(values) != n:
            raise ProtocolError(f"count mismatch: asked {n} latencies, got {len(values)}")
        try:
            return [float(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"non-numeric latency in {values!r}") from exc

    def shutdown(self, timeout_s: float = 10.0) -> int:
        """Send shutdown and wait for a clean exit; returns the exit code."""
        self._send({"type": "shutdown"})
        try:
            return self._proc.wait(timeout=timeout_s)
        except subprocess.TimeoutExpired as exc:
            self.close()
            raise WorkloadFailure(f"workload ignored shutdown for {timeout_s:.1f} s") from exc

    def close(self) -> None:
        """Terminate the child if it is still alive; always safe to call."""
        if self._proc.poll() is None:
            if self._proc.stdin and not self._proc.stdin.closed:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        if exc_info[0] is None and self._proc.poll() is None:
            try:
                self.shutdown()
            except WorkloadFailure:
                pass
        self.close()


def spawn_external(
    spec: WorkloadSpec,
    config: RunConfig,
    *,
    handshake_timeout_s: float = 30.0,
    iteration_timeout_s: float = 600.0,
) -> ExternalWorkload:
    """Start the external process and complete the init/ready handshake."""
    return ExternalWorkload(
        spec,
        config,
        handshake_timeout_s=handshake_timeout_s,
        iteration_timeout_s=iteration_timeout_s,
    )
