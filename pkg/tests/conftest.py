import os
import sys

import pytest

from gdev.errors import WorkloadFailure
from gdev.model import RunConfig

MOCK_SCRIPT = os.path.join(os.path.dirname(__file__), "mock_workload.py")


def mock_command(*extra: str) -> tuple[str, ...]:
    """Command line for the scripted protocol workload."""
    return (sys.executable, MOCK_SCRIPT, *extra)


class FakeHandle:
    def __init__(self, latency_ms=10.0, log=None, key=None):
        self.latency_ms = latency_ms
        self.log = log if log is not None else []
        self.key = key

    def run_iterations(self, n, phase, timeout_s=None):
        self.log.append((self.key, phase, n))
        return [self.latency_ms] * n

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        pass


class FakeRuntime:
    """In-memory stand-in for WorkloadRuntime: constant latencies, optional
    failures on chosen open() calls (1-based positions)."""

    def __init__(self, latency_ms=10.0, fail_at=()):
        self.latency_ms = latency_ms
        self.fail_at = set(fail_at)
        self.opens = 0
        self.log = []

    def open(self, config):
        self.opens += 1
        if self.opens in self.fail_at:
            raise WorkloadFailure(f"synthetic failure at open #{self.opens}")
        return FakeHandle(self.latency_ms, self.log, config.key)


@pytest.fixture
def config():
    return RunConfig(
        model_id="resnet50",
        batch_size=8,
        threads=4,
        repetition_index=1,
        sweep_index=1,
    )
