"""Run statistics: the energy ledger, the end-of-run report, and exporters.

The ledger accumulates independently of the engine's own counters (events are
fed to it one at a time, in processing order), so the final report doubles as
a cross-check on the engine.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping

from .model import PowerProfile, SimulationConfig, SimulatorError, Task


class OutOfOrderEvent(SimulatorError):
    pass


class UnsupportedFormat(SimulatorError):
    pass


TERMINAL_KINDS = ("completed", "missed", "cancelled")
RECORD_KINDS = frozenset({"arrival", "invoke", *TERMINAL_KINDS})


@dataclass
class EnergyLedger:
    """Append-only tally of busy time and outcome counts per machine.

    Busy time is credited when a task leaves a machine (completion or drop),
    by the realized interval length; cancelled tasks never contribute.
    """

    config: SimulationConfig
    machine_ids: tuple[str, ...] = ()
    profiles: Mapping[str, PowerProfile] = field(default_factory=dict)
    busy_time: dict[str, float] = field(default_factory=dict)
    tasks_executed: dict[str, int] = field(default_factory=dict)
    arrived: int = 0
    completed: int = 0
    missed: int = 0
    cancelled: int = 0
    last_time: float = 0.0
    last_terminal_time: float = 0.0

    def __post_init__(self) -> None:
        if not self.machine_ids:
            self.machine_ids = tuple(m.id for m in self.config.machines)
        if not self.profiles:
            self.profiles = {
                m.id: self.config.profile_for(m.type_id) for m in self.config.machines
            }
        for mid in self.machine_ids:
            self.busy_time.setdefault(mid, 0.0)
            self.tasks_executed.setdefault(mid, 0)

    @property
    def makespan(self) -> float:
        return self.last_terminal_time


def record(
    ledger: EnergyLedger,
    kind: str,
    time: float,
    task_id: str | None = None,
    machine_id: str | None = None,
    busy: float = 0.0,
) -> EnergyLedger:
    if kind not in RECORD_KINDS:
        raise ValueError(f"unknown record kind {kind!r}")
    if time < ledger.last_time:
        raise OutOfOrderEvent(f"{kind} at t={time} after t={ledger.last_time}")
    ledger.last_time = time
    if kind == "arrival":
        ledger.arrived += 1
    elif kind == "completed":
        ledger.completed += 1
    elif kind == "missed":
        ledger.missed += 1
    elif kind == "cancelled":
        ledger.cancelled += 1
    if kind in ("completed", "missed"):
        if machine_id is None:
            raise ValueError(f"{kind} record needs a machine_id")
        ledger.busy_time[machine_id] += busy
        ledger.tasks_executed[machine_id] += 1
    if kind in TERMINAL_KINDS:
        ledger.last_terminal_time = max(ledger.last_terminal_time, time)
    return ledger


def energy(
    ledger: EnergyLedger, profiles: Mapping[str, PowerProfile], makespan: float
) -> dict[str, float]:
    """Joules per machine over the run: busy watts while occupied, idle
    watts for the rest of the makespan."""
    out = {}
    for mid in ledger.machine_ids:
        p = profiles[mid]
        busy = ledger.busy_time[mid]
        out[mid] = p.busy_watts * busy + p.idle_watts * (makespan - busy)
    return out


@dataclass(frozen=True)
class SimulationReport:
    config: SimulationConfig
    totals: dict
    miss_rate: float
    cancel_rate: float
    makespan: float
    per_machine: list[dict]
    per_task: list[dict]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "totals": dict(self.totals),
            "miss_rate": self.miss_rate,
            "cancel_rate": self.cancel_rate,
            "makespan": self.makespan,
            "per_machine": [dict(r) for r in self.per_machine],
            "per_task": [dict(r) for r in self.per_task],
        }


def summary(ledger: EnergyLedger, tasks: Mapping[str, Task]) -> SimulationReport:
    arrived = ledger.arrived
    in_system = arrived - ledger.completed - ledger.missed - ledger.cancelled
    makespan = ledger.makespan
    joules = energy(ledger, ledger.profiles, makespan)
    per_machine = [
        {
            "id": mid,
            "busy_time": ledger.busy_time[mid],
            "utilization": (ledger.busy_time[mid] / makespan) if makespan > 0 else 0.0,
            "energy_joules": joules[mid],
            "tasks_executed": ledger.tasks_executed[mid],
        }
        for mid in ledger.machine_ids
    ]
    per_task = [
        {
            "id": t.id,
            "type": t.task_type,
            "arrival": t.arrival,
            "start": t.start,
            "end": t.end,
            "machine": t.assigned_machine,
            "status": t.status.value,
        }
        for t in sorted(tasks.values(), key=lambda t: (t.arrival, t.id))
    ]
    return SimulationReport(
        config=ledger.config,
        totals={
            "arrived": arrived,
            "completed": ledger.completed,
            "missed": ledger.missed,
            "cancelled": ledger.cancelled,
            "in_system": in_system,
        },
        miss_rate=(ledger.missed / arrived) if arrived else 0.0,
        cancel_rate=(ledger.cancelled / arrived) if arrived else 0.0,
        makespan=makespan,
        per_machine=per_machine,
        per_task=per_task,
    )


def _jsonable(value):
    """Normalize floats to at most 9 fractional digits for stable output."""
    if isinstance(value, float):
        rounded = round(value, 9)
        return rounded + 0.0  # collapse -0.0
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def export_json(report: SimulationReport) -> bytes:
    return json.dumps(_jsonable(report.to_dict()), separators=(",", ":")).encode("utf-8")


PER_TASK_HEADER = ("id", "type", "arrival", "start", "end", "machine", "status")


def export_csv(report: SimulationReport) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PER_TASK_HEADER)
    for row in report.per_task:
        writer.writerow(["" if row[k] is None else row[k] for k in PER_TASK_HEADER])
    return out.getvalue().encode("utf-8")


def export(report: SimulationReport, format: str) -> bytes:
    if format == "json":
        return export_json(report)
    if format == "csv":
        return export_csv(report)
    raise UnsupportedFormat(f"unsupported export format {format!r}")
