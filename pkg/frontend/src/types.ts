// Wire types for the simulation session service. These mirror the JSON the
// service emits byte-for-byte; keep field names snake_case to match.

export type SessionStatus =
  | "configuring"
  | "ready"
  | "running"
  | "paused"
  | "finished";

export type TaskStatus =
  | "created"
  | "batch_queued"
  | "machine_queued"
  | "executing"
  | "completed"
  | "missed"
  | "cancelled";

export type EventKind =
  | "arrival"
  | "completion"
  | "deadline_drop"
  | "scheduler_invoke";

export interface Counters {
  arrived: number;
  completed: number;
  missed: number;
  cancelled: number;
  in_system: number;
}

export interface RunningView {
  task: string;
  started: number;
  remaining: number;
}

export interface MachineSnapshot {
  id: string;
  type: string;
  running: RunningView | null;
  local_queue: string[];
}

export interface BinEntry {
  id: string;
  time: number;
}

export interface Bins {
  completed: BinEntry[];
  missed: BinEntry[];
  cancelled: BinEntry[];
}

export interface PerTaskRow {
  id: string;
  type: string;
  arrival: number;
  start: number | null;
  end: number | null;
  machine: string | null;
  status: TaskStatus;
}

export interface PerMachineRow {
  id: string;
  busy_time: number;
  utilization: number;
  energy_joules: number;
  tasks_executed: number;
}

export interface Report {
  config: SessionConfig;
  totals: Record<string, number>;
  miss_rate: number;
  cancel_rate: number;
  makespan: number;
  per_machine: PerMachineRow[];
  per_task: PerTaskRow[];
}

export interface Snapshot {
  now: number;
  event_no: number;
  batch_queue: string[];
  machines: MachineSnapshot[];
  bins: Bins;
  counters: Counters;
  status: SessionStatus;
  report: Report;
}

export interface Delta {
  event_no: number;
  time: number;
  kind: EventKind;
  task?: string;
  machine?: string;
  counters: Counters;
}

export interface MachineSpec {
  id: string;
  type: string;
}

export interface PowerSpec {
  idle_watts: number;
  busy_watts: number;
}

export interface SessionConfig {
  machines: MachineSpec[];
  scheduler_policy: string;
  machine_queue_size: number | null;
  cancellation_enabled: boolean;
  seed: number;
  until: number | null;
  power_profiles: Record<string, PowerSpec>;
}

// --- policies ---------------------------------------------------------------

export type PolicyMode = "immediate" | "batch";

export interface PolicyInfo {
  name: string;
  label: string;
  mode: PolicyMode;
  /** batch policies refuse to run without a bounded machine queue */
  requiresQueueSize: boolean;
}

export const POLICIES: readonly PolicyInfo[] = [
  { name: "fcfs_rr", label: "FCFS / round robin", mode: "immediate", requiresQueueSize: false },
  { name: "met", label: "Minimum execution time", mode: "immediate", requiresQueueSize: false },
  { name: "mct", label: "Minimum completion time", mode: "immediate", requiresQueueSize: false },
  { name: "edf", label: "Earliest deadline first", mode: "immediate", requiresQueueSize: false },
  { name: "min_min", label: "Min-min (batch)", mode: "batch", requiresQueueSize: true },
  { name: "max_min", label: "Max-min (batch)", mode: "batch", requiresQueueSize: true },
];

export function policyInfo(name: string): PolicyInfo | undefined {
  return POLICIES.find((p) => p.name === name.toLowerCase());
}
