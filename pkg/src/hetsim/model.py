"""Core value types: task lifecycle, machine model, EET matrix, run configuration.

Everything here is a plain value. The frozen types (tasks, matrices, configs)
are safe to share across threads; :class:`MachineState` is mutable and owned
exclusively by the engine's step loop.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping


class SimulatorError(Exception):
    """Base class for every error raised by this package."""


class UnknownTaskType(SimulatorError):
    pass


class UnknownMachineType(SimulatorError):
    pass


class IllegalTransition(SimulatorError):
    """A task was asked to make a move the lifecycle graph forbids.

    This always signals an engine or policy bug, never bad user input:
    the simulation aborts rather than continuing from a corrupt state.
    """


ID_PATTERN = re.compile(r"^[A-Za-z0-9_-]+$")


class TaskStatus(Enum):
    CREATED = "created"
    BATCH_QUEUED = "batch_queued"
    MACHINE_QUEUED = "machine_queued"
    EXECUTING = "executing"
    COMPLETED = "completed"
    MISSED = "missed"
    CANCELLED = "cancelled"


#: The lifecycle graph. Absence of an entry means the state is terminal.
LEGAL_TRANSITIONS: Mapping[TaskStatus, frozenset[TaskStatus]] = {
    TaskStatus.CREATED: frozenset({TaskStatus.BATCH_QUEUED}),
    TaskStatus.BATCH_QUEUED: frozenset({TaskStatus.MACHINE_QUEUED, TaskStatus.CANCELLED}),
    TaskStatus.MACHINE_QUEUED: frozenset({TaskStatus.EXECUTING}),
    TaskStatus.EXECUTING: frozenset({TaskStatus.COMPLETED, TaskStatus.MISSED}),
    TaskStatus.COMPLETED: frozenset(),
    TaskStatus.MISSED: frozenset(),
    TaskStatus.CANCELLED: frozenset(),
}

TERMINAL_STATUSES = frozenset({TaskStatus.COMPLETED, TaskStatus.MISSED, TaskStatus.CANCELLED})


@dataclass(frozen=True)
class PowerProfile:
    """Two-level linear power model: a machine draws idle_watts when idle
    and busy_watts while a task occupies it."""

    idle_watts: float = 0.0
    busy_watts: float = 0.0

    def __post_init__(self) -> None:
        if self.idle_watts < 0:
            raise ValueError(f"idle_watts must be >= 0, got {self.idle_watts}")
        if self.busy_watts < self.idle_watts:
            raise ValueError(
                f"busy_watts ({self.busy_watts}) must be >= idle_watts ({self.idle_watts})"
            )


@dataclass(frozen=True)
class TaskType:
    id: str
    label: str | None = None


@dataclass(frozen=True)
class MachineType:
    id: str
    power_profile: PowerProfile = PowerProfile()


@dataclass(frozen=True)
class EETMatrix:
    """Expected-execution-time table: task type x machine type -> seconds.

    The matrix is the sole heterogeneity model: a task of type ``t`` always
    takes exactly ``cell(t, m)`` seconds on a machine of type ``m``.
    Cells must be finite and strictly positive, and the table complete.
    """

    task_types: tuple[str, ...]
    machine_types: tuple[str, ...]
    cells: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        if len(set(self.task_types)) != len(self.task_types):
            raise ValueError("duplicate task type ids")
        if len(set(self.machine_types)) != len(self.machine_types):
            raise ValueError("duplicate machine type ids")
        for t in self.task_types:
            row = self.cells.get(t)
            if row is None:
                raise ValueError(f"missing row {t!r}")
            for m in self.machine_types:
                v = row.get(m)
                if v is None:
                    raise ValueError(f"missing cell ({t!r}, {m!r})")
                if not math.isfinite(v) or v <= 0:
                    raise ValueError(f"cell ({t!r}, {m!r}) must be finite and > 0, got {v}")

    def cell(self, task_type: str, machine_type: str) -> float:
        row = self.cells.get(task_type)
        if row is None:
            raise UnknownTaskType(f"unknown task type {task_type!r}")
        if machine_type not in row or machine_type not in self.machine_types:
            raise UnknownMachineType(f"unknown machine type {machine_type!r}")
        return row[machine_type]

    def row_mean(self, task_type: str) -> float:
        """Mean execution time of a task type across all machine types."""
        row = self.cells.get(task_type)
        if row is None:
            raise UnknownTaskType(f"unknown task type {task_type!r}")
        return sum(row[m] for m in self.machine_types) / len(self.machine_types)

    def with_cell(self, task_type: str, machine_type: str, value: float) -> "EETMatrix":
        """Copy of the matrix with one cell replaced."""
        self.cell(task_type, machine_type)  # raises on unknown ids
        cells = {t: dict(row) for t, row in self.cells.items()}
        cells[task_type][machine_type] = value
        return EETMatrix(self.task_types, self.machine_types, cells)

    @staticmethod
    def build(
        task_types: tuple[str, ...] | list[str],
        machine_types: tuple[str, ...] | list[str],
        cells: Mapping[str, Mapping[str, float]],
    ) -> "EETMatrix":
        return EETMatrix(
            tuple(task_types),
            tuple(machine_types),
            {t: dict(row) for t, row in cells.items()},
        )


def eet_lookup(matrix: EETMatrix, task_type: str, machine_type: str) -> float:
    """Exact cell read; no interpolation, no defaults."""
    return matrix.cell(task_type, machine_type)


@dataclass(frozen=True)
class Task:
    """One unit of work. Immutable: lifecycle moves produce new values."""

    id: str
    task_type: str
    arrival: float
    deadline: float
    status: TaskStatus = TaskStatus.CREATED
    assigned_machine: str | None = None
    start: float | None = None
    end: float | None = None
    #: time of the most recent transition, used to enforce monotonicity
    status_time: float = 0.0

    def __post_init__(self) -> None:
        if self.deadline <= self.arrival:
            raise ValueError(f"task {self.id!r}: deadline must be > arrival")
        if self.start is not None and self.start < self.arrival:
            raise ValueError(f"task {self.id!r}: start before arrival")
        if self.end is not None and self.start is not None and self.end < self.start:
            raise ValueError(f"task {self.id!r}: end before start")


def transition(task: Task, to: TaskStatus, at: float, *, machine: str | None = None) -> Task:
    """Move a task along the lifecycle graph, stamping timestamps.

    ``start`` is set on entering EXECUTING, ``end`` on entering any terminal
    state. ``machine`` records the assignment when a task is mapped.
    """
    allowed = LEGAL_TRANSITIONS[task.status]
    if to not in allowed:
        raise IllegalTransition(f"task {task.id!r}: {task.status.value} -> {to.value}")
    if at < task.status_time:
        raise IllegalTransition(
            f"task {task.id!r}: transition at t={at} before previous at t={task.status_time}"
        )
    fields: dict = {"status": to, "status_time": at}
    if machine is not None:
        fields["assigned_machine"] = machine
    if to is TaskStatus.EXECUTING:
        fields["start"] = at
    if to in TERMINAL_STATUSES:
        fields["end"] = at
    return replace(task, **fields)


@dataclass
class MachineState:
    """Runtime state of one machine instance: a single running slot plus a
    bounded FIFO local queue. Mutable, engine-owned; snapshots are copies."""

    id: str
    machine_type: str
    index: int
    capacity: int | None = None  # None = unbounded local queue
    running_task: str | None = None
    running_start: float = 0.0
    running_release: float = 0.0  # scheduled completion-or-drop time
    local_queue: deque[str] = field(default_factory=deque)
    #: task types parallel to local_queue, so queued work is computable
    #: from the machine alone
    queued_types: deque[str] = field(default_factory=deque)
    queued_eet_sum: float = 0.0
    busy_intervals: list[tuple[float, float]] = field(default_factory=list)
    tasks_executed: int = 0

    @property
    def is_idle(self) -> bool:
        return self.running_task is None

    def release_time(self, now: float) -> float:
        """When the machine can next begin a task: ``now`` if idle, else the
        running task's scheduled end-or-drop time."""
        return now if self.running_task is None else self.running_release

    def has_queue_slot(self) -> bool:
        return self.capacity is None or len(self.local_queue) < self.capacity


@dataclass(frozen=True)
class MachineSpec:
    id: str
    type_id: str


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a run needs besides the EET matrix and the trace.

    ``until`` is the stop rule: None runs to end-of-workload, a number stops
    the clock before any event later than that horizon.
    """

    machines: tuple[MachineSpec, ...]
    scheduler_policy: str
    machine_queue_size: int | None = None
    cancellation_enabled: bool = False
    seed: int = 0
    until: float | None = None
    power_profiles: Mapping[str, PowerProfile] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.machine_queue_size is not None and self.machine_queue_size < 1:
            raise ValueError("machine_queue_size must be >= 1 when bounded")
        ids = [m.id for m in self.machines]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate machine ids")

    def profile_for(self, machine_type: str) -> PowerProfile:
        return self.power_profiles.get(machine_type, PowerProfile())

    def to_dict(self) -> dict:
        return {
            "machines": [{"id": m.id, "type": m.type_id} for m in self.machines],
            "scheduler_policy": self.scheduler_policy,
            "machine_queue_size": self.machine_queue_size,
            "cancellation_enabled": self.cancellation_enabled,
            "seed": self.seed,
            "until": self.until,
            "power_profiles": {
                t: {"idle_watts": p.idle_watts, "busy_watts": p.busy_watts}
                for t, p in sorted(self.power_profiles.items())
            },
        }

    @staticmethod
    def from_dict(data: Mapping) -> "SimulationConfig":
        machines = tuple(
            MachineSpec(str(m["id"]), str(m["type"])) for m in data.get("machines", [])
        )
        profiles = {
            str(t): PowerProfile(float(p.get("idle_watts", 0.0)), float(p.get("busy_watts", 0.0)))
            for t, p in dict(data.get("power_profiles") or {}).items()
        }
        queue_size = data.get("machine_queue_size")
        until = data.get("until")
        return SimulationConfig(
            machines=machines,
            scheduler_policy=str(data["scheduler_policy"]).lower(),
            machine_queue_size=None if queue_size is None else int(queue_size),
            cancellation_enabled=bool(data.get("cancellation_enabled", False)),
            seed=int(data.get("seed", 0)),
            until=None if until is None else float(until),
            power_profiles=profiles,
        )
