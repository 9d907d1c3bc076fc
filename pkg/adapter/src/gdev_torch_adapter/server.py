"""Serve ResNet forward passes over newline-delimited JSON on stdio.

One process serves exactly one (model, batch, threads) configuration; the
parent harness never imports this package, everything crosses the pipe:

    {"type": "init", "model": "resnet18", "batch": 1, "threads": 4}
        -> {"type": "ready", "model": "resnet18", ...version metadata}
    {"type": "run", "phase": "warmup"|"measure", "iterations": N}
        -> {"type": "latencies", "phase": <same>, "values_ms": [N floats]}
    {"type": "shutdown"}  -> exit 0
    {"type": "probe"}     -> {"type": "setting", ...current thread counts}

Latencies are self-timed around the forward pass only, so pipe traffic never
inflates a measurement. Any malformed line, unsupported model, or runtime
failure produces one {"type": "error", ...} reply and a nonzero exit.

The probe request exists so tests can assert that the thread setting is in
place before the first warm-up pass and never drifts mid-run; the harness
itself never sends it.
"""

import contextlib
import json
import sys
import time

import torch
import torchvision
from torchvision import models

from . import __version__

SUPPORTED = {
    "resnet18": (models.resnet18, "ResNet18_Weights"),
    "resnet50": (models.resnet50, "ResNet50_Weights"),
}


class ProtocolViolation(Exception):
    """Request we cannot honor; reported to the parent, then the process dies."""


def build_model(model_id: str):
    """Construct the network in eval mode, pre-trained when the weights are
    reachable, randomly initialized otherwise.

    Latency does not depend on weight values, so an offline machine measures
    the same thing a connected one does.
    """
    ctor, weights_attr = SUPPORTED[model_id]
    try:
        net = ctor(weights=getattr(models, weights_attr).DEFAULT)
    except Exception:
        net = ctor(weights=None)
    net.eval()
    return net


def _positive_int(message: dict, key: str) -> int:
    value = message.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ProtocolViolation(f"{key} must be a positive integer, got {value!r}")
    return value


class Session:
    """State for one worker: the network, its synthetic input batch, and the
    thread setting, all fixed at init and reused for every iteration."""

    def __init__(self):
        self.model_id = None
        self.net = None
        self.batch_input = None

    def handle(self, message):
        """Map one request object to one reply object; None means shutdown."""
        if not isinstance(message, dict):
            raise ProtocolViolation("request must be a JSON object")
        kind = message.get("type")
        if kind == "init":
            return self._init(message)
        if kind == "run":
            return self._run(message)
        if kind == "probe":
            return {
                "type": "setting",
                "intra_op_threads": torch.get_num_threads(),
                "inter_op_threads": torch.get_num_interop_threads(),
            }
        if kind == "shutdown":
            return None
        raise ProtocolViolation(f"unsupported message type: {kind!r}")

    def _init(self, message):
        model_id = message.get("model")
        if model_id not in SUPPORTED:
            raise ProtocolViolation(f"unsupported model: {model_id!r}")
        batch = _positive_int(message, "batch")
        threads = _positive_int(message, "threads")
        # intra-op setting must precede the first forward pass
        torch.set_num_threads(threads)
        self.net = build_model(model_id)
        self.model_id = model_id
        # one synthetic batch per process; iterations time the forward pass only
        self.batch_input = torch.randn(batch, 3, 224, 224)
        return {
            "type": "ready",
            "model": model_id,
            "adapter_version": __version__,
            "torch_version": torch.__version__,
            "torchvision_version": torchvision.__version__,
            "intra_op_threads": torch.get_num_threads(),
            "inter_op_threads": torch.get_num_interop_threads(),
        }

    def _run(self, message):
        if self.net is None:
            raise ProtocolViolation("run before init")
        phase = message.get("phase")
        if phase not in ("warmup", "measure"):
            raise ProtocolViolation(f"unsupported phase: {phase!r}")
        iterations = message.get("iterations")
        if isinstance(iterations, bool) or not isinstance(iterations, int) or iterations < 0:
            raise ProtocolViolation(f"iterations must be a non-negative integer, got {iterations!r}")
        values = []
        with torch.inference_mode():
            for _ in range(iterations):
                start = time.perf_counter()
                self.net(self.batch_input)
                values.append((time.perf_counter() - start) * 1000.0)
        return {"type": "latencies", "phase": phase, "values_ms": values}


def _say(stream, obj):
    stream.write(json.dumps(obj) + "\n")
    stream.flush()


def serve(stdin=None, stdout=None) -> int:
    """Run the message loop until shutdown or EOF (exit 0) or the first
    protocol/runtime failure (error reply, exit 1)."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    try:
        torch.set_num_interop_threads(1)
    except RuntimeError:
        pass  # immutable once torch has started parallel work
    session = Session()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except ValueError:
            _say(stdout, {"type": "error", "message": "malformed JSON request"})
            return 1
        try:
            # library chatter (e.g. weight download progress) prints to
            # sys.stdout; the protocol owns that stream, so evict it
            with contextlib.redirect_stdout(sys.stderr):
                reply = session.handle(message)
        except ProtocolViolation as exc:
            _say(stdout, {"type": "error", "message": str(exc)})
            return 1
        except Exception as exc:
            _say(stdout, {"type": "error", "message": f"runtime failure: {exc}"})
            return 1
        if reply is None:
            return 0
        _say(stdout, reply)
    return 0
