"""Pluggable scheduling policies: a registry plus the six built-in heuristics.

A policy is a pure decision function: it sees a snapshot of the batch queue
and the machines at one instant and returns Map/Cancel decisions. Per-run
memory (e.g. the round-robin pointer) lives in an explicit state dict owned
by the engine, never in module globals, so runs stay independent.

Tie-breaking is total everywhere: equal scores resolve by lowest machine
index, then earliest task arrival, then task id.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .model import (
    EETMatrix,
    MachineState,
    SimulationConfig,
    SimulatorError,
    Task,
    eet_lookup,
)


class UnknownPolicy(SimulatorError):
    pass


class DuplicatePolicyName(SimulatorError):
    pass


class MissingQueueSize(SimulatorError):
    """A batch-mode policy was configured without a bounded machine queue."""


class InvalidDecision(SimulatorError):
    """A policy emitted a decision the engine cannot apply (policy bug)."""


class PolicyMode(Enum):
    IMMEDIATE = "immediate"
    BATCH = "batch"


@dataclass(frozen=True)
class PolicyDescriptor:
    name: str
    mode: PolicyMode
    requires_queue_size: bool = False

    def __post_init__(self) -> None:
        if self.mode is PolicyMode.BATCH and not self.requires_queue_size:
            raise ValueError("batch-mode policies must set requires_queue_size")


@dataclass(frozen=True)
class Map:
    task_id: str
    machine_id: str


@dataclass(frozen=True)
class Cancel:
    task_id: str


@dataclass(frozen=True)
class Defer:
    """Explicit no-op; equivalent to emitting nothing for a task."""


Decision = Map | Cancel | Defer


def estimated_completion_time(
    machine: MachineState, eet: EETMatrix, task_type: str, now: float
) -> float:
    """When a task of `task_type` would finish on `machine` if mapped now:
    machine release time, plus the full EET of everything already queued,
    plus the task's own EET."""
    own = eet_lookup(eet, task_type, machine.machine_type)
    queued = sum(eet_lookup(eet, q, machine.machine_type) for q in machine.queued_types)
    return machine.release_time(now) + queued + own


@dataclass
class MachineView:
    """Per-invocation working copy of one machine, cheap to mutate.

    ``ect_base`` is release time plus the summed EET of the local queue, so
    ``ect_base + cell`` is the estimated completion time of a candidate task.
    """

    index: int
    id: str
    type_id: str
    busy: bool
    queue_len: int
    capacity: int | None
    ect_base: float

    def can_accept(self) -> bool:
        # an idle machine takes the task straight into its running slot
        if not self.busy:
            return True
        return self.capacity is None or self.queue_len < self.capacity

    def assign(self, eet_value: float) -> None:
        if self.busy:
            self.queue_len += 1
        else:
            self.busy = True
        self.ect_base += eet_value


@dataclass(frozen=True)
class PolicyContext:
    now: float
    batch: tuple[Task, ...]
    machines: tuple[MachineView, ...]
    eet: EETMatrix
    config: SimulationConfig


DecisionFn = Callable[[PolicyContext, dict], list[Decision]]


@dataclass(frozen=True)
class PolicyEntry:
    descriptor: PolicyDescriptor
    decide: DecisionFn


_REGISTRY: dict[str, PolicyEntry] = {}


def register_policy(descriptor: PolicyDescriptor, decide: DecisionFn) -> PolicyEntry:
    key = descriptor.name.lower()
    if key in _REGISTRY:
        raise DuplicatePolicyName(f"policy {descriptor.name!r} is already registered")
    entry = PolicyEntry(descriptor, decide)
    _REGISTRY[key] = entry
    return entry


def get_policy(name: str) -> PolicyEntry:
    entry = _REGISTRY.get(name.lower())
    if entry is None:
        known = ", ".join(sorted(_REGISTRY))
        raise UnknownPolicy(f"unknown policy {name!r} (registered: {known})")
    return entry


def registered_policies() -> list[str]:
    return sorted(_REGISTRY)


def build_views(
    machines: Sequence[MachineState], eet: EETMatrix, now: float
) -> tuple[MachineView, ...]:
    views = []
    for m in machines:
        views.append(
            MachineView(
                index=m.index,
                id=m.id,
                type_id=m.machine_type,
                busy=m.running_task is not None,
                queue_len=len(m.local_queue),
                capacity=m.capacity,
                ect_base=m.release_time(now) + m.queued_eet_sum,
            )
        )
    return tuple(views)


def invoke(
    policy: str | PolicyEntry,
    batch_queue: Sequence[Task],
    machines: Sequence[MachineState],
    eet: EETMatrix,
    now: float,
    config: SimulationConfig,
    state: dict | None = None,
) -> list[Decision]:
    """Run one scheduling round over a consistent snapshot.

    With cancellation enabled, tasks whose best possible completion time
    (minimum ECT over all machines, at invocation start) already exceeds
    their deadline are cancelled up front; the policy sees only the rest.
    """
    entry = get_policy(policy) if isinstance(policy, str) else policy
    if entry.descriptor.requires_queue_size and config.machine_queue_size is None:
        raise MissingQueueSize(
            f"policy {entry.descriptor.name!r} needs a bounded machine queue size"
        )
    if state is None:
        state = {}
    views = build_views(machines, eet, now)
    decisions: list[Decision] = []
    batch = tuple(batch_queue)
    if config.cancellation_enabled:
        kept: list[Task] = []
        for task in batch:
            best = min(v.ect_base + eet_lookup(eet, task.task_type, v.type_id) for v in views)
            if best > task.deadline:
                decisions.append(Cancel(task.id))
            else:
                kept.append(task)
        batch = tuple(kept)
    ctx = PolicyContext(now=now, batch=batch, machines=views, eet=eet, config=config)
    decisions.extend(entry.decide(ctx, state))
    return decisions


# --- built-in policies -------------------------------------------------------


def _cell(ctx: PolicyContext, task: Task, view: MachineView) -> float:
    return eet_lookup(ctx.eet, task.task_type, view.type_id)


def _map_in_order(ctx: PolicyContext, tasks: Sequence[Task], choose) -> list[Decision]:
    """Map tasks one at a time; stop once no machine can take more."""
    out: list[Decision] = []
    for task in tasks:
        open_views = [v for v in ctx.machines if v.can_accept()]
        if not open_views:
            break
        view = choose(task, open_views)
        view.assign(_cell(ctx, task, view))
        out.append(Map(task.id, view.id))
    return out


def _fcfs_rr(ctx: PolicyContext, state: dict) -> list[Decision]:
    """FIFO over tasks, machines in fixed rotation; a full machine is
    skipped and the pointer moves past whichever machine was used."""
    n = len(ctx.machines)
    pointer = state.get("rr_pointer", 0)
    out: list[Decision] = []
    for task in ctx.batch:
        chosen = None
        for offset in range(n):
            view = ctx.machines[(pointer + offset) % n]
            if view.can_accept():
                chosen = view
                break
        if chosen is None:
            break
        chosen.assign(_cell(ctx, task, chosen))
        out.append(Map(task.id, chosen.id))
        pointer = (chosen.index + 1) % n
    state["rr_pointer"] = pointer
    return out


def _met(ctx: PolicyContext, state: dict) -> list[Decision]:
    """Minimum execution time: ignores machine load entirely."""
    return _map_in_order(
        ctx,
        ctx.batch,
        lambda task, views: min(views, key=lambda v: (_cell(ctx, task, v), v.index)),
    )


def _mct(ctx: PolicyContext, state: dict) -> list[Decision]:
    """Minimum completion time: head task to the machine finishing it first."""
    return _map_in_order(
        ctx,
        ctx.batch,
        lambda task, views: min(views, key=lambda v: (v.ect_base + _cell(ctx, task, v), v.index)),
    )


def _edf(ctx: PolicyContext, state: dict) -> list[Decision]:
    """Earliest deadline first over the batch queue, machine by minimum ECT."""
    ordered = sorted(ctx.batch, key=lambda t: (t.deadline, t.arrival, t.id))
    return _map_in_order(
        ctx,
        ordered,
        lambda task, views: min(views, key=lambda v: (v.ect_base + _cell(ctx, task, v), v.index)),
    )


def _min_min(ctx: PolicyContext, state: dict) -> list[Decision]:
    """Repeatedly map the (task, machine) pair with the globally smallest
    ECT until the batch empties or every queue slot is taken."""
    remaining = list(ctx.batch)
    out: list[Decision] = []
    while remaining:
        open_views = [v for v in ctx.machines if v.can_accept()]
        if not open_views:
            break
        best_key = None
        best = None
        for task in remaining:
            for view in open_views:
                key = (view.ect_base + _cell(ctx, task, view), view.index, task.arrival, task.id)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (task, view)
        task, view = best  # type: ignore[misc]
        view.assign(_cell(ctx, task, view))
        out.append(Map(task.id, view.id))
        remaining.remove(task)
    return out


def _max_min(ctx: PolicyContext, state: dict) -> list[Decision]:
    """Repeatedly map the task whose best-case ECT is largest, sending it
    to the machine achieving that best case."""
    remaining = list(ctx.batch)
    out: list[Decision] = []
    while remaining:
        open_views = [v for v in ctx.machines if v.can_accept()]
        if not open_views:
            break
        best_key = None
        best = None
        for task in remaining:
            ect, view = min(
                ((v.ect_base + _cell(ctx, task, v), v) for v in open_views),
                key=lambda pair: (pair[0], pair[1].index),
            )
            key = (-ect, view.index, task.arrival, task.id)
            if best_key is None or key < best_key:
                best_key = key
                best = (task, view)
        task, view = best  # type: ignore[misc]
        view.assign(_cell(ctx, task, view))
        out.append(Map(task.id, view.id))
        remaining.remove(task)
    return out


register_policy(PolicyDescriptor("fcfs_rr", PolicyMode.IMMEDIATE), _fcfs_rr)
register_policy(PolicyDescriptor("met", PolicyMode.IMMEDIATE), _met)
register_policy(PolicyDescriptor("mct", PolicyMode.IMMEDIATE), _mct)
register_policy(PolicyDescriptor("edf", PolicyMode.IMMEDIATE), _edf)
register_policy(PolicyDescriptor("min_min", PolicyMode.BATCH, requires_queue_size=True), _min_min)
register_policy(PolicyDescriptor("max_min", PolicyMode.BATCH, requires_queue_size=True), _max_min)
