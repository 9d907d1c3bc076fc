"""Drive the worker the way the harness does: a subprocess and JSON lines.

Nothing here imports the harness package; the pipe protocol and the output
CSV format are the only shared surface, which is the point.
"""

import csv
import importlib.util
import json
import math
import select
import shutil
import subprocess
import sys
import time

import pytest

if importlib.util.find_spec("gdev_torch_adapter") is None:
    pytest.skip("worker package not installed", allow_module_level=True)

LAUNCH = (sys.executable, "-m", "gdev_torch_adapter")


class Worker:
    """One adapter subprocess plus say/hear helpers with a reply deadline."""

    def __init__(self):
        self.proc = subprocess.Popen(
            LAUNCH,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )

    def say(self, obj):
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()

    def say_raw(self, text):
        self.proc.stdin.write(text)
        self.proc.stdin.flush()

    def hear(self, timeout_s=90.0):
        deadline = time.monotonic() + timeout_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.proc.kill()
                raise AssertionError("no reply before deadline")
            ready, _, _ = select.select([self.proc.stdout], [], [], min(remaining, 0.5))
            if ready:
                line = self.proc.stdout.readline()
                if not line:
                    raise AssertionError(f"child closed stdout, exit {self.proc.poll()}")
                return json.loads(line)

    def wait(self, timeout_s=30.0):
        try:
            self.proc.wait(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
            raise AssertionError("child did not exit")
        return self.proc.returncode

    def close(self):
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait()
        for stream in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
            if stream is not None:
                try:
                    stream.close()
                except (OSError, ValueError):
                    pass


@pytest.fixture
def worker():
    w = Worker()
    yield w
    w.close()


def init_message(model="resnet18", batch=1, threads=1, **extra):
    return {"type": "init", "model": model, "batch": batch, "threads": threads, **extra}


def test_round_trip_resnet18(worker):
    start = time.perf_counter()
    worker.say(init_message())
    ready = worker.hear()
    assert ready["type"] == "ready"
    assert ready["model"] == "resnet18"
    assert ready["inter_op_threads"] == 1
    assert ready["intra_op_threads"] == 1
    assert ready["torch_version"]

    worker.say({"type": "run", "phase": "warmup", "iterations": 2})
    warm = worker.hear()
    assert warm["type"] == "latencies"
    assert warm["phase"] == "warmup"
    assert len(warm["values_ms"]) == 2

    worker.say({"type": "run", "phase": "measure", "iterations": 3})
    measured = worker.hear()
    assert measured["phase"] == "measure"
    values = measured["values_ms"]
    assert len(values) == 3
    assert all(v > 0 and math.isfinite(v) for v in values)

    worker.say({"type": "shutdown"})
    assert worker.wait() == 0
    assert time.perf_counter() - start < 120.0


def test_thread_setting_applied_at_init_and_stable(worker):
    worker.say(init_message(threads=2))
    assert worker.hear()["intra_op_threads"] == 2

    # already in force before the first warm-up pass
    worker.say({"type": "probe"})
    before = worker.hear()
    assert before == {"type": "setting", "intra_op_threads": 2, "inter_op_threads": 1}

    worker.say({"type": "run", "phase": "warmup", "iterations": 1})
    worker.hear()
    worker.say({"type": "probe"})
    assert worker.hear() == before

    worker.say({"type": "shutdown"})
    assert worker.wait() == 0


def test_zero_iterations_gives_empty_list(worker):
    worker.say(init_message())
    worker.hear()
    worker.say({"type": "run", "phase": "measure", "iterations": 0})
    assert worker.hear()["values_ms"] == []
    worker.say({"type": "shutdown"})
    assert worker.wait() == 0


def test_unknown_fields_are_ignored(worker):
    worker.say(init_message(trace_id="abc123", verbosity=9))
    assert worker.hear()["type"] == "ready"
    worker.say({"type": "shutdown"})
    assert worker.wait() == 0


def test_unknown_model_rejected(worker):
    worker.say(init_message(model="alexnet"))
    reply = worker.hear(timeout_s=30.0)
    assert reply["type"] == "error"
    assert "alexnet" in reply["message"]
    assert worker.wait() != 0


def test_run_before_init_rejected(worker):
    worker.say({"type": "run", "phase": "measure", "iterations": 1})
    reply = worker.hear(timeout_s=30.0)
    assert reply["type"] == "error"
    assert "init" in reply["message"]
    assert worker.wait() != 0


def test_malformed_json_rejected(worker):
    worker.say_raw("this is not json\n")
    reply = worker.hear(timeout_s=30.0)
    assert reply["type"] == "error"
    assert worker.wait() != 0


def test_unknown_type_rejected(worker):
    worker.say({"type": "telemetry"})
    reply = worker.hear(timeout_s=30.0)
    assert reply["type"] == "error"
    assert "telemetry" in reply["message"]
    assert worker.wait() != 0


def test_bad_iteration_count_rejected(worker):
    worker.say(init_message())
    worker.hear()
    worker.say({"type": "run", "phase": "measure", "iterations": -3})
    assert worker.hear(timeout_s=30.0)["type"] == "error"
    assert worker.wait() != 0


def test_eof_without_shutdown_exits_clean(worker):
    worker.say(init_message())
    worker.hear()
    worker.proc.stdin.close()
    assert worker.wait() == 0


class TestSessionInternals:
    """In-process checks for contracts the pipe cannot show."""

    def make_session(self, batch=2):
        from gdev_torch_adapter.server import Session

        session = Session()
        reply = session.handle(init_message(batch=batch))
        assert reply["type"] == "ready"
        return session

    def test_input_batch_created_once_and_reused(self):
        session = self.make_session(batch=2)
        first = session.batch_input
        assert tuple(first.shape) == (2, 3, 224, 224)
        session.handle({"type": "run", "phase": "warmup", "iterations": 1})
        session.handle({"type": "run", "phase": "measure", "iterations": 1})
        assert session.batch_input is first

    def test_forward_passes_disable_gradients(self):
        import torch

        session = self.make_session(batch=1)
        seen = []
        session.net.register_forward_hook(
            lambda module, args, output: seen.append(torch.is_inference_mode_enabled())
        )
        session.handle({"type": "run", "phase": "warmup", "iterations": 1})
        session.handle({"type": "run", "phase": "measure", "iterations": 2})
        assert seen == [True, True, True]

    def test_shutdown_maps_to_none(self):
        from gdev_torch_adapter.server import Session

        assert Session().handle({"type": "shutdown"}) is None


@pytest.mark.skipif(shutil.which("gdev") is None, reason="harness CLI not installed")
def test_harness_cli_integration(tmp_path):
    manifest = {
        "matrix": {
            "models": ["resnet18"],
            "batch_sizes": [1],
            "thread_counts": [1],
            "repetitions": 1,
            "sweep_count": 1,
            "warmup_iterations": 1,
            "measure_iterations": 2,
        },
        "workloads": [
            {"model_id": "resnet18", "kind": "external", "command": list(LAUNCH)}
        ],
    }
    manifest_path = tmp_path / "adapter-smoke.json"
    manifest_path.write_text(json.dumps(manifest))
    out_dir = tmp_path / "results"

    done = subprocess.run(
        ["gdev", "run", str(manifest_path), "--out", str(out_dir)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert done.returncode == 0, done.stderr

    with open(out_dir / "raw_latencies.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert {r["model"] for r in rows} == {"resnet18"}
    assert all(float(r["latency_ms"]) > 0 for r in rows)

    with open(out_dir / "aggregates.csv", newline="") as fh:
        aggregates = list(csv.DictReader(fh))
    assert len(aggregates) == 1
    assert aggregates[0]["model"] == "resnet18"
