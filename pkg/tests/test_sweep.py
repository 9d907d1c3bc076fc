from types import SimpleNamespace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdev.errors import InvalidPlan, Timeout, WorkloadFailure
from gdev.model import SweepMatrix
from gdev.sweep import execute_config, execute_sweep, plan_sweep
from gdev.workload import EXTERNAL, WorkloadRuntime, WorkloadSpec

from conftest import FakeHandle, FakeRuntime, mock_command


def matrix(**overrides):
    fields = dict(
        models=("resnet18", "resnet50"),
        batch_sizes=(1, 2, 4, 8, 16),
        thread_counts=(1, 2, 3, 4),
        repetitions=3,
        sweep_count=10,
    )
    fields.update(overrides)
    return SweepMatrix(**fields)


class TestPlanSweep:
    def test_legacy_cardinality(self):
        plan = plan_sweep(matrix())
        assert len(plan.configs) == 1200
        assert len({(c.model_id, c.threads, c.batch_size) for c in plan.configs}) == 40

    def test_granite_cardinality(self):
        plan = plan_sweep(matrix(thread_counts=(1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 40, 48)))
        assert len(plan.configs) == 3600
        assert len({(c.model_id, c.threads, c.batch_size) for c in plan.configs}) == 120

    def test_singleton(self):
        m = matrix(
            models=("only",), batch_sizes=(1,), thread_counts=(1,),
            repetitions=1, sweep_count=1,
        )
        plan = plan_sweep(m)
        assert len(plan.configs) == 1

    def test_no_duplicate_tuples(self):
        plan = plan_sweep(matrix(repetitions=2, sweep_count=2))
        tuples = [
            (c.model_id, c.batch_size, c.threads, c.repetition_index, c.sweep_index)
            for c in plan.configs
        ]
        assert len(set(tuples)) == len(tuples)

    def test_loop_nest_order(self):
        m = matrix(
            models=("a", "b"), batch_sizes=(1, 2), thread_counts=(1, 2),
            repetitions=2, sweep_count=2,
        )
        plan = plan_sweep(m)
        head = plan.configs[:4]
        # repetition varies fastest, then batch
        assert [(c.batch_size, c.repetition_index) for c in head] == [
            (1, 1), (1, 2), (2, 1), (2, 2)
        ]
        # threads change only after every batch x repetition combination
        assert plan.configs[4].threads == 2
        # model changes after the full thread block, sweep index last
        assert plan.configs[8].model_id == "b"
        assert all(c.sweep_index == 1 for c in plan.configs[:16])
        assert plan.configs[16].sweep_index == 2

    def test_determinism(self):
        assert plan_sweep(matrix()) == plan_sweep(matrix())

    def test_validates_matrix(self):
        with pytest.raises(InvalidPlan):
            plan_sweep(matrix(batch_sizes=()))

    def test_core_list_attached(self):
        plan = plan_sweep(matrix(), core_list=(0,))
        assert all(c.core_list == (0,) for c in plan.configs)

    @given(
        st.integers(min_value=1, max_value=3),
        st.integers(min_value=1, max_value=4),
        st.integers(min_value=1, max_value=4),
        st.integers(min_value=1, max_value=3),
        st.integers(min_value=1, max_value=3),
    )
    def test_cardinality_formula(self, nm, nb, nt, r, s):
        m = SweepMatrix(
            models=tuple(f"m{i}" for i in range(nm)),
            batch_sizes=tuple(range(1, nb + 1)),
            thread_counts=tuple(range(1, nt + 1)),
            repetitions=r,
            sweep_count=s,
        )
        plan = plan_sweep(m)
        assert len(plan.configs) == nm * nb * nt * r * s


class TestExecuteConfig:
    def test_exact_iteration_counts(self, config):
        handle = FakeHandle()
        record = execute_config(
            config, handle, warmup_iterations=20, measure_iterations=100
        )
        assert len(record.warmup_latencies_ms) == 20
        assert len(record.measured_latencies_ms) == 100
        assert handle.log == [(None, "warmup", 20), (None, "measure", 100)]

    def test_zero_warmup(self, config):
        record = execute_config(config, FakeHandle(), warmup_iterations=0, measure_iterations=5)
        assert record.warmup_latencies_ms == ()

    def test_constant_latency_passthrough(self, config):
        record = execute_config(
            config, FakeHandle(10.0), warmup_iterations=2, measure_iterations=100
        )
        assert all(v == 10.0 for v in record.measured_latencies_ms)

    def test_iteration_over_ceiling_times_out(self, config):
        handle = FakeHandle(latency_ms=1500.0)
        with pytest.raises(Timeout):
            execute_config(
                config,
                handle,
                warmup_iterations=0,
                measure_iterations=3,
                iteration_timeout_s=1.0,
            )


class TestExecuteSweep:
    def test_one_record_per_config_in_plan_order(self):
        m = matrix(repetitions=1, sweep_count=1, warmup_iterations=1, measure_iterations=3)
        plan = plan_sweep(m)
        dataset = execute_sweep(plan, FakeRuntime())
        assert len(dataset.records) == len(plan.configs) == 40
        assert [r.config for r in dataset.records] == list(plan.configs)
        assert dataset.failures == []

    def test_timestamps_sequential(self):
        m = matrix(
            models=("only",), batch_sizes=(1, 2), thread_counts=(1,),
            repetitions=2, sweep_count=1, warmup_iterations=0, measure_iterations=1,
        )
        dataset = execute_sweep(plan_sweep(m), FakeRuntime())
        stamps = [r.timestamp for r in dataset.records]
        assert stamps == sorted(stamps)

    def test_uses_matrix_iteration_counts(self):
        m = matrix(
            models=("only",), batch_sizes=(1,), thread_counts=(1,),
            repetitions=1, sweep_count=1, warmup_iterations=7, measure_iterations=13,
        )
        dataset = execute_sweep(plan_sweep(m), FakeRuntime())
        assert len(dataset.records[0].warmup_latencies_ms) == 7
        assert len(dataset.records[0].measured_latencies_ms) == 13

    def test_empty_plan(self):
        dataset = execute_sweep(
            SimpleNamespace(configs=()), FakeRuntime(),
            warmup_iterations=0, measure_iterations=1,
        )
        assert dataset.records == [] and dataset.failures == []

    def test_aborts_on_first_failure_by_default(self):
        m = matrix(repetitions=1, sweep_count=1, measure_iterations=2)
        with pytest.raises(WorkloadFailure):
            execute_sweep(plan_sweep(m), FakeRuntime(fail_at=(3,)))

    def test_continue_on_error_records_failure(self):
        m = matrix(repetitions=1, sweep_count=1, warmup_iterations=0, measure_iterations=2)
        plan = plan_sweep(m)
        dataset = execute_sweep(plan, FakeRuntime(fail_at=(3,)), continue_on_error=True)
        assert len(dataset.records) == 39
        assert len(dataset.failures) == 1
        failed = dataset.failures[0]
        assert failed.config == plan.configs[2]
        assert failed.kind == "WorkloadFailure"
        assert "synthetic failure" in failed.message
        assert all(r.config != plan.configs[2] for r in dataset.records)

    def test_continue_on_error_records_timeouts(self):
        m = matrix(
            models=("only",), batch_sizes=(1,), thread_counts=(1,),
            repetitions=1, sweep_count=1, warmup_iterations=0, measure_iterations=1,
        )
        dataset = execute_sweep(
            plan_sweep(m),
            FakeRuntime(latency_ms=2500.0),
            continue_on_error=True,
            iteration_timeout_s=2.0,
        )
        assert dataset.records == []
        assert dataset.failures[0].kind == "Timeout"

    def test_with_real_external_mock(self):
        m = matrix(
            models=("resnet50",), batch_sizes=(1, 2), thread_counts=(1,),
            repetitions=1, sweep_count=1, warmup_iterations=1, measure_iterations=4,
        )
        runtime = WorkloadRuntime(
            (
                WorkloadSpec(
                    model_id="resnet50",
                    kind=EXTERNAL,
                    command=mock_command("--latency-ms", "10"),
                ),
            )
        )
        dataset = execute_sweep(plan_sweep(m), runtime)
        assert len(dataset.records) == 2
        assert all(
            v == 10.0 for r in dataset.records for v in r.measured_latencies_ms
        )
