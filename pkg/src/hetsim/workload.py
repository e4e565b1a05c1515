"""Workload ingestion and synthesis: EET/trace CSV parsing and a seeded generator.

CSV dialect (pinned so byte-exact round trips are testable): comma separated,
first line is the header, LF or CRLF line endings, ids restricted to
``[A-Za-z0-9_-]``, numbers use a decimal point. No quoting is ever needed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import (
    EETMatrix,
    ID_PATTERN,
    SimulationConfig,
    SimulatorError,
)

TRACE_HEADER = ("task_id", "task_type", "arrival", "deadline")
EET_HEADER_FIRST = "task_type"


class MalformedCsv(SimulatorError):
    pass


class NonPositiveCell(SimulatorError):
    pass


class DuplicateRowOrColumn(SimulatorError):
    pass


class RaggedRow(SimulatorError):
    pass


class DuplicateTaskId(SimulatorError):
    pass


class DeadlineNotAfterArrival(SimulatorError):
    pass


class NegativeArrival(SimulatorError):
    pass


class InvalidSpec(SimulatorError):
    pass


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    row: int | None = None

    def __str__(self) -> str:
        where = f" (row {self.row})" if self.row is not None else ""
        return f"{self.code}: {self.message}{where}"


class ValidationFailed(SimulatorError):
    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class TraceRow:
    task_id: str
    task_type: str
    arrival: float
    deadline: float


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"not UTF-8 text: {exc}") from exc


def _check_id(value: str, what: str, row: int) -> str:
    if not ID_PATTERN.match(value):
        raise MalformedCsv(f"bad {what} {value!r} at row {row}: ids are [A-Za-z0-9_-]")
    return value


def _parse_number(value: str, what: str, row: int) -> float:
    try:
        parsed = float(value)
    except ValueError as exc:
        raise MalformedCsv(f"bad {what} {value!r} at row {row}") from exc
    if not math.isfinite(parsed):
        raise MalformedCsv(f"{what} must be finite, got {value!r} at row {row}")
    return parsed


def parse_eet_csv(data: bytes | str) -> EETMatrix:
    """Parse an EET table: header ``task_type,<machine_type>...``, one row
    per task type, every cell a strictly positive duration in seconds."""
    rows = list(csv.reader(io.StringIO(_decode(data))))
    rows = [r for r in rows if r]  # tolerate trailing blank lines
    if not rows:
        raise MalformedCsv("empty file")
    header = rows[0]
    if not header or header[0] != EET_HEADER_FIRST:
        raise MalformedCsv(f"first header cell must be {EET_HEADER_FIRST!r}")
    machine_types = [_check_id(c, "machine type", 0) for c in header[1:]]
    if not machine_types:
        raise MalformedCsv("no machine type columns")
    if len(set(machine_types)) != len(machine_types):
        raise DuplicateRowOrColumn("duplicate machine type column")
    task_types: list[str] = []
    cells: dict[str, dict[str, float]] = {}
    for lineno, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise RaggedRow(f"row {lineno} has {len(row)} fields, expected {len(header)}")
        t = _check_id(row[0], "task type", lineno)
        if t in cells:
            raise DuplicateRowOrColumn(f"duplicate task type row {t!r}")
        task_types.append(t)
        cells[t] = {}
        for m, raw in zip(machine_types, row[1:]):
            v = _parse_number(raw, f"EET cell ({t},{m})", lineno)
            if v <= 0:
                raise NonPositiveCell(f"EET cell ({t},{m}) must be > 0, got {raw}")
            cells[t][m] = v
    return EETMatrix(tuple(task_types), tuple(machine_types), cells)


def serialize_eet_csv(matrix: EETMatrix) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([EET_HEADER_FIRST, *matrix.machine_types])
    for t in matrix.task_types:
        writer.writerow([t, *(repr(matrix.cells[t][m]) for m in matrix.machine_types)])
    return out.getvalue().encode("utf-8")


def parse_trace_csv(data: bytes | str) -> list[TraceRow]:
    """Parse an arrival trace: header ``task_id,task_type,arrival,deadline``.
    Rows come back sorted by (arrival, task_id); input order is free."""
    rows = list(csv.reader(io.StringIO(_decode(data))))
    rows = [r for r in rows if r]
    if not rows:
        raise MalformedCsv("empty file")
    if tuple(rows[0]) != TRACE_HEADER:
        raise MalformedCsv(f"header must be {','.join(TRACE_HEADER)}")
    seen: set[str] = set()
    out: list[TraceRow] = []
    for lineno, row in enumerate(rows[1:], start=1):
        if len(row) != len(TRACE_HEADER):
            raise MalformedCsv(f"row {lineno} has {len(row)} fields, expected 4")
        task_id = _check_id(row[0], "task id", lineno)
        if task_id in seen:
            raise DuplicateTaskId(f"duplicate task id {task_id!r} at row {lineno}")
        seen.add(task_id)
        task_type = _check_id(row[1], "task type", lineno)
        arrival = _parse_number(row[2], "arrival", lineno)
        deadline = _parse_number(row[3], "deadline", lineno)
        if arrival < 0:
            raise NegativeArrival(f"task {task_id!r}: arrival {arrival} < 0")
        if deadline <= arrival:
            raise DeadlineNotAfterArrival(
                f"task {task_id!r}: deadline {deadline} not after arrival {arrival}"
            )
        out.append(TraceRow(task_id, task_type, arrival, deadline))
    out.sort(key=lambda r: (r.arrival, r.task_id))
    return out


def serialize_trace_csv(rows: Iterable[TraceRow]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for r in sorted(rows, key=lambda r: (r.arrival, r.task_id)):
        writer.writerow([r.task_id, r.task_type, repr(r.arrival), repr(r.deadline)])
    return out.getvalue().encode("utf-8")


def validate(
    trace: Sequence[TraceRow], eet: EETMatrix, config: SimulationConfig
) -> list[ValidationIssue]:
    """Cross-check a parsed trace and config against the EET matrix.

    Pure: returns the list of problems (empty means valid), mutates nothing.
    """
    issues: list[ValidationIssue] = []
    known_types = set(eet.task_types)
    for i, row in enumerate(trace, start=1):
        if row.task_type not in known_types:
            issues.append(
                ValidationIssue(
                    "UnknownTaskType",
                    f"trace task {row.task_id!r} has type {row.task_type!r} not in the EET matrix",
                    row=i,
                )
            )
    known_machine_types = set(eet.machine_types)
    for spec in config.machines:
        if spec.type_id not in known_machine_types:
            issues.append(
                ValidationIssue(
                    "UnknownMachineType",
                    f"machine {spec.id!r} has type {spec.type_id!r} not in the EET matrix",
                )
            )
    if not config.machines:
        issues.append(ValidationIssue("NoMachines", "configuration lists no machines"))
    return issues


# --- workload synthesis ------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny 64-bit stream generator (splitmix finalizer). Used instead of a
    library RNG so inversion sampling stays bit-stable across platforms and
    library versions, which the monotone-intensity property relies on."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0**-53)


@dataclass(frozen=True)
class Poisson:
    """Poisson arrival process: exponential inter-arrivals at `rate` tasks/s."""

    rate: float


@dataclass(frozen=True)
class UniformInterarrival:
    """Inter-arrival times drawn uniformly from [0, interval) seconds."""

    interval: float


ArrivalProcess = Poisson | UniformInterarrival


@dataclass(frozen=True)
class WorkloadSpec:
    """Recipe for a synthetic trace.

    Deadlines are set to ``arrival + deadline_factor * mean EET`` of the
    drawn type across machine types, so tightness reads the same way for
    any machine set.
    """

    count: int
    arrival: ArrivalProcess
    type_mix: Mapping[str, float]
    deadline_factor: float

    @staticmethod
    def from_dict(data: Mapping) -> "WorkloadSpec":
        try:
            arr = data["arrival"]
            process = str(arr["process"]).lower()
            if process == "poisson":
                arrival: ArrivalProcess = Poisson(float(arr["rate"]))
            elif process == "uniform":
                arrival = UniformInterarrival(float(arr["interval"]))
            else:
                raise InvalidSpec(f"unknown arrival process {process!r}")
            return WorkloadSpec(
                count=int(data["count"]),
                arrival=arrival,
                type_mix={str(k): float(v) for k, v in dict(data["type_mix"]).items()},
                deadline_factor=float(data["deadline_factor"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad workload spec: {exc}") from exc

    def with_rate(self, rate: float) -> "WorkloadSpec":
        if not isinstance(self.arrival, Poisson):
            raise InvalidSpec("rate sweeps need a Poisson arrival process")
        return WorkloadSpec(self.count, Poisson(rate), self.type_mix, self.deadline_factor)


def _check_spec(spec: WorkloadSpec, eet: EETMatrix) -> list[str]:
    ordered = sorted(spec.type_mix)
    if spec.count < 0:
        raise InvalidSpec("count must be >= 0")
    if not ordered:
        raise InvalidSpec("type_mix is empty")
    for t in ordered:
        if t not in eet.task_types:
            raise InvalidSpec(f"type_mix names {t!r}, not a row of the EET matrix")
        p = spec.type_mix[t]
        if p < 0 or p > 1:
            raise InvalidSpec(f"type_mix[{t!r}] = {p} outside [0, 1]")
    if abs(sum(spec.type_mix[t] for t in ordered) - 1.0) > 1e-9:
        raise InvalidSpec("type_mix probabilities must sum to 1")
    if spec.deadline_factor <= 0:
        raise InvalidSpec("deadline_factor must be > 0")
    if isinstance(spec.arrival, Poisson) and spec.arrival.rate <= 0:
        raise InvalidSpec("Poisson rate must be > 0")
    if isinstance(spec.arrival, UniformInterarrival) and spec.arrival.interval <= 0:
        raise InvalidSpec("uniform interval must be > 0")
    return ordered


def generate_workload(spec: WorkloadSpec, eet: EETMatrix, seed: int) -> list[TraceRow]:
    """Synthesize a trace: deterministic in (spec, seed).

    Inter-arrivals and type draws come from one interleaved SplitMix64
    stream by inversion, so for a fixed seed raising the Poisson rate
    rescales every inter-arrival in place and no arrival ever moves later.
    """
    ordered_types = _check_spec(spec, eet)
    cumulative: list[tuple[float, str]] = []
    acc = 0.0
    for t in ordered_types:
        acc += spec.type_mix[t]
        cumulative.append((acc, t))

    rng = SplitMix64(seed)
    width = max(4, len(str(max(spec.count - 1, 0))))
    rows: list[TraceRow] = []
    clock = 0.0
    for i in range(spec.count):
        u_gap = rng.next_float()
        u_type = rng.next_float()
        if isinstance(spec.arrival, Poisson):
            gap = -math.log1p(-u_gap) / spec.arrival.rate
        else:
            gap = u_gap * spec.arrival.interval
        clock += gap
        task_type = ordered_types[-1]
        for threshold, t in cumulative:
            if u_type < threshold:
                task_type = t
                break
        deadline = clock + spec.deadline_factor * eet.row_mean(task_type)
        rows.append(TraceRow(f"g{i:0{width}d}", task_type, clock, deadline))
    return rows
