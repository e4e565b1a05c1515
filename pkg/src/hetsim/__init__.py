"""Deterministic discrete-event simulator for heterogeneous computing systems.

Tasks arrive over time, a pluggable scheduling policy maps them onto machines
with type-dependent execution times, and every task ends Completed, Missed,
or Cancelled. Reports cover deadline, utilization, and energy metrics.
"""

from .engine import (
    Counters,
    EmptyEventQueue,
    Event,
    EventClass,
    SimulationState,
    StepOutcome,
    init,
    reset,
    run,
    step,
)
from .metrics import SimulationReport, export, export_csv, export_json, summary
from .model import (
    EETMatrix,
    IllegalTransition,
    MachineSpec,
    MachineState,
    PowerProfile,
    SimulationConfig,
    SimulatorError,
    Task,
    TaskStatus,
    UnknownMachineType,
    UnknownTaskType,
    eet_lookup,
    transition,
)
from .policies import (
    Cancel,
    Defer,
    InvalidDecision,
    Map,
    MissingQueueSize,
    PolicyContext,
    PolicyDescriptor,
    PolicyMode,
    UnknownPolicy,
    estimated_completion_time,
    get_policy,
    invoke,
    register_policy,
    registered_policies,
)
from .workload import (
    Poisson,
    SplitMix64,
    TraceRow,
    UniformInterarrival,
    ValidationFailed,
    ValidationIssue,
    WorkloadSpec,
    generate_workload,
    parse_eet_csv,
    parse_trace_csv,
    serialize_eet_csv,
    serialize_trace_csv,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Cancel",
    "Counters",
    "Defer",
    "EETMatrix",
    "EmptyEventQueue",
    "Event",
    "EventClass",
    "IllegalTransition",
    "InvalidDecision",
    "MachineSpec",
    "MachineState",
    "Map",
    "MissingQueueSize",
    "Poisson",
    "PolicyContext",
    "PolicyDescriptor",
    "PolicyMode",
    "PowerProfile",
    "SimulationConfig",
    "SimulationReport",
    "SimulationState",
    "SimulatorError",
    "SplitMix64",
    "StepOutcome",
    "Task",
    "TaskStatus",
    "TraceRow",
    "UniformInterarrival",
    "UnknownMachineType",
    "UnknownPolicy",
    "UnknownTaskType",
    "ValidationFailed",
    "ValidationIssue",
    "WorkloadSpec",
    "eet_lookup",
    "estimated_completion_time",
    "export",
    "export_csv",
    "export_json",
    "generate_workload",
    "get_policy",
    "init",
    "invoke",
    "parse_eet_csv",
    "parse_trace_csv",
    "register_policy",
    "registered_policies",
    "reset",
    "run",
    "serialize_eet_csv",
    "serialize_trace_csv",
    "step",
    "summary",
    "transition",
    "validate",
]
