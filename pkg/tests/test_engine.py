import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.engine import EmptyEventQueue, EventClass, SimulationState, init
from hetsim.model import MachineSpec, SimulationConfig, TaskStatus
from hetsim.policies import (
    InvalidDecision,
    Map,
    PolicyDescriptor,
    PolicyMode,
    register_policy,
)
from hetsim.workload import (
    Poisson,
    ValidationFailed,
    WorkloadSpec,
    generate_workload,
    parse_eet_csv,
    parse_trace_csv,
)

from conftest import s1_config

S1_EET = parse_eet_csv("task_type,fast,slow\nA,2,4\nB,4,10\n")

TERMINAL = {TaskStatus.COMPLETED, TaskStatus.MISSED, TaskStatus.CANCELLED}


def per_task_table(report):
    return {r["id"]: (r["start"], r["end"], r["machine"], r["status"])
            for r in report.per_task}


def single_machine(eet_cell: float, trace_rows: str, *, queue=2, policy="fcfs_rr"):
    eet = parse_eet_csv(f"task_type,m\nA,{eet_cell}\n")
    trace = parse_trace_csv("task_id,task_type,arrival,deadline\n" + trace_rows)
    config = SimulationConfig(machines=(MachineSpec("m", "m"),),
                              scheduler_policy=policy, machine_queue_size=queue)
    return init(config, eet, trace)


class TestEventOrdering:
    def test_s1_mct_event_kind_stream(self, s1_eet, s1_trace):
        state = init(s1_config("mct"), s1_eet, s1_trace)
        kinds = [o.event.kind for o in state.iter_steps()]
        assert kinds == [
            "arrival", "arrival", "scheduler_invoke",          # t=0, one invoke
            "arrival", "scheduler_invoke",                     # t=1
            "completion", "scheduler_invoke",                  # t=2 t1
            "completion", "scheduler_invoke",                  # t=5 t3
            "completion", "scheduler_invoke",                  # t=6 t2
        ]

    def test_completion_outranks_arrival_at_same_instant(self):
        # t2 arrives exactly when t1 completes; the machine must be free
        # for the scheduler at that instant
        state = single_machine(2.0, "t1,A,0,10\nt2,A,2,10\n", policy="mct")
        report = state.run()
        rows = per_task_table(report)
        assert rows["t2"] == (2.0, 4.0, "m", "completed")

    def test_invokes_coalesce_per_timestamp(self):
        state = single_machine(1.0, "t1,A,0,10\nt2,A,0,10\nt3,A,0,10\n")
        outcomes = list(state.iter_steps())
        kinds = [o.event.kind for o in outcomes]
        # three same-instant arrivals share one invoke; then one per completion
        assert kinds[:4] == ["arrival", "arrival", "arrival", "scheduler_invoke"]
        assert kinds.count("scheduler_invoke") == 4  # t = 0, 1, 2, 3

    def test_step_after_drain_raises(self, s1_eet, s1_trace):
        state = init(s1_config("mct"), s1_eet, s1_trace)
        state.run()
        with pytest.raises(EmptyEventQueue):
            state.step()


class TestGoldenTraces:
    """Hand-derived end-to-end tables for the two-machine reference scenario."""

    def run_policy(self, policy, s1_eet, s1_trace):
        return init(s1_config(policy), s1_eet, s1_trace).run()

    def test_fcfs_rr(self, s1_eet, s1_trace):
        report = self.run_policy("fcfs_rr", s1_eet, s1_trace)
        assert per_task_table(report) == {
            "t1": (0.0, 2.0, "fast", "completed"),
            "t2": (0.0, 10.0, "slow", "completed"),
            "t3": (2.0, 4.0, "fast", "completed"),
        }
        assert report.makespan == 10.0

    def test_met(self, s1_eet, s1_trace):
        report = self.run_policy("met", s1_eet, s1_trace)
        assert per_task_table(report) == {
            "t1": (0.0, 2.0, "fast", "completed"),
            "t2": (2.0, 6.0, "fast", "completed"),
            "t3": (6.0, 6.0, "fast", "missed"),  # dequeued at its deadline
        }
        assert report.totals["missed"] == 1
        assert report.makespan == 6.0

    def test_mct(self, s1_eet, s1_trace):
        report = self.run_policy("mct", s1_eet, s1_trace)
        assert per_task_table(report) == {
            "t1": (0.0, 2.0, "fast", "completed"),
            "t2": (2.0, 6.0, "fast", "completed"),
            "t3": (1.0, 5.0, "slow", "completed"),
        }
        assert report.makespan == 6.0

    def test_edf(self, s1_eet, s1_trace):
        assert per_task_table(self.run_policy("edf", s1_eet, s1_trace)) == {
            "t1": (0.0, 2.0, "fast", "completed"),
            "t2": (2.0, 6.0, "fast", "completed"),
            "t3": (1.0, 5.0, "slow", "completed"),
        }

    def test_min_min(self, s1_eet, s1_trace):
        assert per_task_table(self.run_policy("min_min", s1_eet, s1_trace)) == {
            "t1": (0.0, 2.0, "fast", "completed"),
            "t2": (2.0, 6.0, "fast", "completed"),
            "t3": (1.0, 5.0, "slow", "completed"),
        }

    def test_max_min(self, s1_eet, s1_trace):
        report = self.run_policy("max_min", s1_eet, s1_trace)
        assert per_task_table(report) == {
            "t1": (0.0, 4.0, "slow", "completed"),
            "t2": (0.0, 4.0, "fast", "completed"),
            "t3": (4.0, 6.0, "fast", "completed"),  # finishes exactly at deadline
        }
        assert report.totals["missed"] == 0


class TestDeadlineHandling:
    def test_drop_mid_execution_at_deadline_exactly(self):
        state = single_machine(10.0, "t1,A,0,100\nt2,A,0,12\n")
        rows = per_task_table(state.run())
        assert rows["t1"] == (0.0, 10.0, "m", "completed")
        assert rows["t2"] == (10.0, 12.0, "m", "missed")  # ran [10, 12] then dropped

    def test_hopeless_dequeue_runs_zero_time(self):
        state = single_machine(10.0, "t1,A,0,100\nt2,A,0,5\n")
        report = state.run()
        rows = per_task_table(report)
        assert rows["t2"] == (10.0, 10.0, "m", "missed")
        # the machine never spent a second on t2
        assert report.per_machine[0]["busy_time"] == 10.0

    def test_completion_at_deadline_counts_as_met(self):
        state = single_machine(5.0, "t1,A,0,5\n")
        rows = per_task_table(state.run())
        assert rows["t1"] == (0.0, 5.0, "m", "completed")

    def test_cancellation_pre_filter(self, s1_eet):
        trace = parse_trace_csv(
            "task_id,task_type,arrival,deadline\nt1,B,0,3\nt2,A,0,10\n"
        )
        report = init(s1_config("mct", cancellation_enabled=True), s1_eet, trace).run()
        rows = per_task_table(report)
        assert rows["t1"] == (None, 0.0, None, "cancelled")
        assert rows["t2"][3] == "completed"
        assert report.totals == {
            "arrived": 2, "completed": 1, "missed": 0, "cancelled": 1, "in_system": 0,
        }


class TestHorizon:
    def test_until_stops_before_later_events(self, s1_eet, s1_trace):
        state = init(s1_config("mct", until=1.5), s1_eet, s1_trace)
        report = state.run()
        assert state.now == 1.0
        assert report.totals["arrived"] == 3
        assert report.totals["completed"] == 0
        assert report.totals["in_system"] == 3
        assert state.pending_events > 0

    def test_resume_after_horizon_matches_uninterrupted_run(self, s1_eet, s1_trace):
        paused = init(s1_config("mct", until=1.5), s1_eet, s1_trace)
        paused.run()
        resumed = paused.run(until=None)
        straight = init(s1_config("mct"), s1_eet, s1_trace).run()
        # configs differ (the horizon), everything observed must not
        assert resumed.per_task == straight.per_task
        assert resumed.per_machine == straight.per_machine
        assert resumed.totals == straight.totals
        assert resumed.makespan == straight.makespan

    def test_event_exactly_at_horizon_is_processed(self, s1_eet, s1_trace):
        state = init(s1_config("mct", until=1.0), s1_eet, s1_trace)
        state.run()
        assert state.now == 1.0
        assert state.counters().arrived == 3


class TestSnapshot:
    def test_initial_snapshot(self, s1_eet, s1_trace):
        snap = init(s1_config("mct"), s1_eet, s1_trace).snapshot()
        assert snap["now"] == 0.0
        assert snap["batch_queue"] == []
        assert snap["counters"]["arrived"] == 0
        assert [m["id"] for m in snap["machines"]] == ["fast", "slow"]

    def test_after_three_steps_running_with_remaining(self, s1_eet, s1_trace):
        state = init(s1_config("mct"), s1_eet, s1_trace)
        for _ in range(3):  # arrival t1, arrival t2, invoke
            state.step()
        snap = state.snapshot()
        assert snap["batch_queue"] == []
        fast = snap["machines"][0]
        assert fast["running"] == {"task": "t1", "started": 0.0, "remaining": 2.0}
        assert fast["local_queue"] == ["t2"]

    def test_finished_bins_partition_tasks(self, s1_eet, s1_trace):
        state = init(s1_config("mct"), s1_eet, s1_trace)
        state.run()
        snap = state.snapshot()
        ids = [b["id"] for b in snap["bins"]["completed"]]
        assert sorted(ids) == ["t1", "t2", "t3"]
        assert snap["bins"]["missed"] == [] and snap["bins"]["cancelled"] == []


class TestValidationAtInit:
    def test_unknown_trace_type_rejected(self, s1_eet):
        trace = parse_trace_csv("task_id,task_type,arrival,deadline\nt,C,0,10\n")
        with pytest.raises(ValidationFailed) as err:
            init(s1_config("mct"), s1_eet, trace)
        assert any(i.code == "UnknownTaskType" for i in err.value.issues)

    def test_no_machines_rejected(self, s1_eet, s1_trace):
        config = SimulationConfig(machines=(), scheduler_policy="mct",
                                  machine_queue_size=2)
        with pytest.raises(ValidationFailed):
            init(config, s1_eet, s1_trace)

    def test_empty_trace_is_fine(self, s1_eet):
        report = init(s1_config("mct"), s1_eet, []).run()
        assert report.totals == {
            "arrived": 0, "completed": 0, "missed": 0, "cancelled": 0, "in_system": 0,
        }
        assert report.makespan == 0.0


class TestBadPolicyRejected:
    def test_overfull_map_raises(self, s1_eet):
        register_policy(
            PolicyDescriptor("stuff_machine_zero", PolicyMode.IMMEDIATE),
            lambda ctx, state: [Map(t.id, ctx.machines[0].id) for t in ctx.batch],
        )
        trace = parse_trace_csv(
            "task_id,task_type,arrival,deadline\n"
            + "".join(f"t{i},A,0,1000\n" for i in range(5))
        )
        state = init(s1_config("stuff_machine_zero", machine_queue_size=1),
                     s1_eet, trace)
        with pytest.raises(InvalidDecision):
            state.run()


def recount(state: SimulationState) -> dict:
    """Independent tally straight from the task table."""
    by_status = {s: 0 for s in TaskStatus}
    for t in state.tasks.values():
        by_status[t.status] += 1
    arrived = len(state.tasks) - by_status[TaskStatus.CREATED]
    return {
        "arrived": arrived,
        "completed": by_status[TaskStatus.COMPLETED],
        "missed": by_status[TaskStatus.MISSED],
        "cancelled": by_status[TaskStatus.CANCELLED],
        "in_system": arrived - sum(by_status[s] for s in TERMINAL),
    }


class TestConservation:
    @settings(max_examples=25, deadline=None)
    @given(
        seed=st.integers(0, 1000),
        policy=st.sampled_from(["fcfs_rr", "met", "mct", "edf", "min_min", "max_min"]),
        cancel=st.booleans(),
    )
    def test_counters_match_task_table_after_every_step(self, seed, policy, cancel):
        spec = WorkloadSpec(count=30, arrival=Poisson(1.0),
                            type_mix={"A": 0.6, "B": 0.4}, deadline_factor=2.0)
        trace = generate_workload(spec, S1_EET, seed)
        state = init(s1_config(policy, cancellation_enabled=cancel, seed=seed),
                     S1_EET, trace)
        while state.pending_events:
            outcome = state.step()
            assert outcome.counters._asdict() == recount(state)
        final = state.counters()
        assert final.arrived == 30
        assert final.in_system == 0
        assert final.arrived == final.completed + final.missed + final.cancelled


class TestDeterminism:
    @pytest.mark.parametrize("policy", ["fcfs_rr", "met", "mct", "edf", "min_min", "max_min"])
    def test_rerun_identical(self, policy, s1_eet):
        spec = WorkloadSpec(count=50, arrival=Poisson(1.5),
                            type_mix={"A": 0.5, "B": 0.5}, deadline_factor=2.5)
        trace = generate_workload(spec, s1_eet, 11)
        a = init(s1_config(policy), s1_eet, trace).run()
        b = init(s1_config(policy), s1_eet, trace).run()
        assert a == b

    def test_reset_gives_fresh_identical_run(self, s1_eet, s1_trace):
        state = init(s1_config("fcfs_rr"), s1_eet, s1_trace)
        first = state.run()
        second = state.reset().run()
        assert first == second


class TestBusyIntervals:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 500),
           policy=st.sampled_from(["fcfs_rr", "mct", "min_min"]))
    def test_no_overlap_per_machine(self, seed, policy):
        spec = WorkloadSpec(count=40, arrival=Poisson(2.0),
                            type_mix={"A": 0.5, "B": 0.5}, deadline_factor=2.0)
        trace = generate_workload(spec, S1_EET, seed)
        state = init(s1_config(policy), S1_EET, trace)
        state.run()
        for m in state.machines:
            intervals = sorted(m.busy_intervals)
            for (s0, e0), (s1, e1) in zip(intervals, intervals[1:]):
                assert e0 <= s1
            for s0, e0 in intervals:
                assert e0 > s0
