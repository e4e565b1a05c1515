"""Deterministic discrete-event kernel.

Events are totally ordered by (time, class, insertion seq). The class order
Completion < DeadlineDrop < Arrival < SchedulerInvoke means capacity freed at
an instant is visible to the scheduler at that same instant, and a task
finishing exactly at its deadline counts as met.

Execution start rule: when a machine begins task T at time s with duration d,
 - s + d <= deadline  -> Completion scheduled at s + d,
 - s < deadline < s+d -> DeadlineDrop scheduled at the deadline,
 - deadline <= s      -> the task is already hopeless when dequeued; a
   DeadlineDrop fires at s itself and the task runs for zero time.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, NamedTuple, Sequence

from . import metrics, policies, workload
from .model import (
    MachineState,
    SimulationConfig,
    SimulatorError,
    Task,
    TaskStatus,
    eet_lookup,
    transition,
)
from .workload import TraceRow, ValidationFailed


class EmptyEventQueue(SimulatorError):
    pass


class EventClass(IntEnum):
    COMPLETION = 0
    DEADLINE_DROP = 1
    ARRIVAL = 2
    SCHEDULER_INVOKE = 3


_KIND_NAMES = {
    EventClass.COMPLETION: "completion",
    EventClass.DEADLINE_DROP: "deadline_drop",
    EventClass.ARRIVAL: "arrival",
    EventClass.SCHEDULER_INVOKE: "scheduler_invoke",
}


@dataclass(frozen=True)
class Event:
    time: float
    klass: EventClass
    seq: int
    task_id: str | None = None
    machine_id: str | None = None

    @property
    def kind(self) -> str:
        return _KIND_NAMES[self.klass]


class Counters(NamedTuple):
    arrived: int
    completed: int
    missed: int
    cancelled: int
    in_system: int


@dataclass(frozen=True)
class StepOutcome:
    event: Event
    event_no: int
    counters: Counters
    finished: bool


_USE_CONFIG = object()


class SimulationState:
    """One run's mutable state. Single-threaded: never step concurrently."""

    def __init__(
        self,
        config: SimulationConfig,
        eet,
        trace: Sequence[TraceRow],
    ):
        issues = workload.validate(trace, eet, config)
        if issues:
            raise ValidationFailed(issues)
        self.policy = policies.get_policy(config.scheduler_policy)
        if self.policy.descriptor.requires_queue_size and config.machine_queue_size is None:
            raise policies.MissingQueueSize(
                f"policy {config.scheduler_policy!r} needs --queue-size / machine_queue_size"
            )
        self.config = config
        self.eet = eet
        self.trace = tuple(sorted(trace, key=lambda r: (r.arrival, r.task_id)))

        self.now = 0.0
        self.event_no = 0
        self._seq = 0
        self._heap: list[tuple[float, int, int, str | None, int]] = []
        self._pending_invokes: set[float] = set()
        self.batch: dict[str, None] = {}  # insertion-ordered FIFO with O(1) removal
        self.tasks: dict[str, Task] = {}
        self.machines: list[MachineState] = [
            MachineState(
                id=spec.id,
                machine_type=spec.type_id,
                index=i,
                capacity=config.machine_queue_size,
            )
            for i, spec in enumerate(config.machines)
        ]
        self._machine_by_id = {m.id: m for m in self.machines}
        self.policy_state: dict = {}
        self.ledger = metrics.EnergyLedger(config)
        self.arrived = 0
        self.completed = 0
        self.missed = 0
        self.cancelled = 0
        for row in self.trace:
            task = Task(id=row.task_id, task_type=row.task_type,
                        arrival=row.arrival, deadline=row.deadline)
            self.tasks[task.id] = task
            self._push(row.arrival, EventClass.ARRIVAL, task.id, None)

    # --- event queue ---------------------------------------------------------

    def _push(self, time: float, klass: EventClass, task_id: str | None,
              machine_index: int | None) -> None:
        heapq.heappush(self._heap, (time, int(klass), self._seq, task_id, machine_index))
        self._seq += 1

    def _schedule_invoke(self, time: float) -> None:
        # at most one pending scheduler invocation per timestamp
        if time not in self._pending_invokes:
            self._pending_invokes.add(time)
            self._push(time, EventClass.SCHEDULER_INVOKE, None, None)

    @property
    def pending_events(self) -> int:
        return len(self._heap)

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None

    def counters(self) -> Counters:
        terminal = self.completed + self.missed + self.cancelled
        return Counters(self.arrived, self.completed, self.missed, self.cancelled,
                        self.arrived - terminal)

    # --- machine mechanics ---------------------------------------------------

    def _start_next(self, machine: MachineState) -> None:
        """Pull the local queue head into the running slot, applying the
        start rule. Runs only when the slot is free."""
        if machine.running_task is not None or not machine.local_queue:
            return
        task_id = machine.local_queue.popleft()
        machine.queued_types.popleft()
        task = self.tasks[task_id]
        d = eet_lookup(self.eet, task.task_type, machine.machine_type)
        machine.queued_eet_sum -= d
        if not machine.local_queue:
            machine.queued_eet_sum = 0.0  # kill float residue when empty
        s = self.now
        self.tasks[task_id] = transition(task, TaskStatus.EXECUTING, s)
        machine.running_task = task_id
        machine.running_start = s
        machine.tasks_executed += 1
        if s + d <= task.deadline:
            machine.running_release = s + d
            machine.busy_intervals.append((s, s + d))
            self._push(s + d, EventClass.COMPLETION, task_id, machine.index)
        elif task.deadline > s:
            machine.running_release = task.deadline
            machine.busy_intervals.append((s, task.deadline))
            self._push(task.deadline, EventClass.DEADLINE_DROP, task_id, machine.index)
        else:
            # already past its deadline when dequeued: zero execution
            machine.running_release = s
            self._push(s, EventClass.DEADLINE_DROP, task_id, machine.index)

    def _apply_decisions(self, decisions: Sequence[policies.Decision]) -> None:
        for decision in decisions:
            if isinstance(decision, policies.Defer):
                continue
            if isinstance(decision, policies.Cancel):
                task = self.tasks[decision.task_id]
                self.tasks[task.id] = transition(task, TaskStatus.CANCELLED, self.now)
                del self.batch[task.id]
                self.cancelled += 1
                metrics.record(self.ledger, "cancelled", self.now, task_id=task.id)
                continue
            task = self.tasks[decision.task_id]
            machine = self._machine_by_id.get(decision.machine_id)
            if machine is None:
                raise policies.InvalidDecision(f"unknown machine {decision.machine_id!r}")
            if task.id not in self.batch:
                raise policies.InvalidDecision(f"task {task.id!r} is not in the batch queue")
            if machine.running_task is not None and not machine.has_queue_slot():
                raise policies.InvalidDecision(
                    f"machine {machine.id!r} local queue is full"
                )
            self.tasks[task.id] = transition(
                task, TaskStatus.MACHINE_QUEUED, self.now, machine=machine.id
            )
            del self.batch[task.id]
            machine.local_queue.append(task.id)
            machine.queued_types.append(task.task_type)
            machine.queued_eet_sum += eet_lookup(self.eet, task.task_type, machine.machine_type)
            if machine.running_task is None:
                self._start_next(machine)

    # --- stepping ------------------------------------------------------------

    def step(self) -> StepOutcome:
        if not self._heap:
            raise EmptyEventQueue("no events to process")
        time, klass_int, seq, task_id, machine_index = heapq.heappop(self._heap)
        klass = EventClass(klass_int)
        self.now = time
        self.event_no += 1
        machine_id: str | None = None
        if klass is EventClass.ARRIVAL:
            task = self.tasks[task_id]
            self.tasks[task_id] = transition(task, TaskStatus.BATCH_QUEUED, time)
            self.batch[task_id] = None
            self.arrived += 1
            metrics.record(self.ledger, "arrival", time, task_id=task_id)
            self._schedule_invoke(time)
        elif klass is EventClass.COMPLETION:
            machine = self.machines[machine_index]
            machine_id = machine.id
            task = self.tasks[task_id]
            self.tasks[task_id] = transition(task, TaskStatus.COMPLETED, time)
            self.completed += 1
            metrics.record(self.ledger, "completed", time, task_id=task_id,
                           machine_id=machine.id, busy=time - task.start)
            machine.running_task = None
            self._start_next(machine)
            self._schedule_invoke(time)
        elif klass is EventClass.DEADLINE_DROP:
            machine = self.machines[machine_index]
            machine_id = machine.id
            task = self.tasks[task_id]
            self.tasks[task_id] = transition(task, TaskStatus.MISSED, time)
            self.missed += 1
            metrics.record(self.ledger, "missed", time, task_id=task_id,
                           machine_id=machine.id, busy=time - task.start)
            machine.running_task = None
            self._start_next(machine)
            self._schedule_invoke(time)
        else:  # SCHEDULER_INVOKE
            self._pending_invokes.discard(time)
            metrics.record(self.ledger, "invoke", time)
            if self.batch:
                decisions = policies.invoke(
                    self.policy,
                    [self.tasks[tid] for tid in self.batch],
                    self.machines,
                    self.eet,
                    time,
                    self.config,
                    self.policy_state,
                )
                self._apply_decisions(decisions)
        event = Event(time, klass, seq, task_id, machine_id)
        return StepOutcome(event, self.event_no, self.counters(), not self._heap)

    def run(self, until=_USE_CONFIG) -> metrics.SimulationReport:
        """Step until the event queue drains, or stop before any event past
        the horizon. Identical inputs always give the identical report."""
        horizon = self.config.until if until is _USE_CONFIG else until
        while self._heap and (horizon is None or self._heap[0][0] <= horizon):
            self.step()
        return self.report()

    def reset(self) -> "SimulationState":
        """Fresh state built from the same config, matrix, and trace."""
        return SimulationState(self.config, self.eet, self.trace)

    def report(self) -> metrics.SimulationReport:
        return metrics.summary(self.ledger, self.tasks)

    # --- observation ---------------------------------------------------------

    def snapshot(self) -> dict:
        """Immutable view of the run at the current event boundary."""
        bins: dict[str, list[dict]] = {"completed": [], "missed": [], "cancelled": []}
        for task in sorted(self.tasks.values(), key=lambda t: (t.end or 0.0, t.id)):
            if task.status is TaskStatus.COMPLETED:
                bins["completed"].append({"id": task.id, "time": task.end})
            elif task.status is TaskStatus.MISSED:
                bins["missed"].append({"id": task.id, "time": task.end})
            elif task.status is TaskStatus.CANCELLED:
                bins["cancelled"].append({"id": task.id, "time": task.end})
        machines = []
        for m in self.machines:
            running = None
            if m.running_task is not None:
                running = {
                    "task": m.running_task,
                    "started": m.running_start,
                    "remaining": m.running_release - self.now,
                }
            machines.append({
                "id": m.id,
                "type": m.machine_type,
                "running": running,
                "local_queue": list(m.local_queue),
            })
        return {
            "now": self.now,
            "event_no": self.event_no,
            "batch_queue": list(self.batch),
            "machines": machines,
            "bins": bins,
            "counters": self.counters()._asdict(),
        }

    def iter_steps(self) -> Iterator[StepOutcome]:
        """Step lazily until the queue drains (no horizon)."""
        while self._heap:
            yield self.step()


def init(config: SimulationConfig, eet, trace: Sequence[TraceRow]) -> SimulationState:
    return SimulationState(config, eet, trace)


def step(state: SimulationState) -> StepOutcome:
    return state.step()


def run(state: SimulationState, until=_USE_CONFIG) -> metrics.SimulationReport:
    return state.run(until)


def reset(state: SimulationState) -> SimulationState:
    return state.reset()
