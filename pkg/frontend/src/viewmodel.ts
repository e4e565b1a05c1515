// Pipeline view model: built from a full snapshot, then kept current by
// applying event deltas. Arrival/completion/deadline_drop deltas carry
// enough to update locally; scheduler_invoke does not (mapping and
// cancellation decisions are not in the delta payload), so the caller must
// refetch the snapshot when applyDelta reports resync.

import type { EetGrid, TraceRow } from "./csv.js";
import type { BinEntry, Counters, Delta, SessionStatus, Snapshot } from "./types.js";

export interface TaskInfo {
  type: string;
  deadline: number;
}

/** The two user-supplied inputs; the model needs them to mirror the
 * engine's start rule when it promotes a queued task locally. */
export interface WorkloadInputs {
  eet: EetGrid;
  trace: TraceRow[];
}

export interface RunningTask {
  task: string;
  started: number;
  /** absolute scheduled end-or-drop time, same arithmetic as the engine */
  release: number;
}

export interface MachineModel {
  id: string;
  type: string;
  running: RunningTask | null;
  queue: string[];
}

export interface PipelineModel {
  now: number;
  eventNo: number;
  status: SessionStatus;
  /** task ids not yet arrived, in (arrival, id) order */
  workload: string[];
  /** system batch queue, FIFO */
  batch: string[];
  machines: MachineModel[];
  bins: { completed: BinEntry[]; missed: BinEntry[]; cancelled: BinEntry[] };
  counters: Counters;
  tasks: Map<string, TaskInfo>;
  eet: EetGrid;
}

export function taskTable(inputs: WorkloadInputs): Map<string, TaskInfo> {
  const table = new Map<string, TaskInfo>();
  for (const row of inputs.trace) {
    table.set(row.taskId, { type: row.taskType, deadline: row.deadline });
  }
  return table;
}

export function fromSnapshot(snap: Snapshot, inputs: WorkloadInputs): PipelineModel {
  return {
    now: snap.now,
    eventNo: snap.event_no,
    status: snap.status,
    workload: snap.report.per_task
      .filter((row) => row.status === "created")
      .map((row) => row.id),
    batch: [...snap.batch_queue],
    machines: snap.machines.map((m) => ({
      id: m.id,
      type: m.type,
      running:
        m.running === null
          ? null
          : {
              task: m.running.task,
              started: m.running.started,
              release: snap.now + m.running.remaining,
            },
      queue: [...m.local_queue],
    })),
    bins: {
      completed: snap.bins.completed.map((b) => ({ ...b })),
      missed: snap.bins.missed.map((b) => ({ ...b })),
      cancelled: snap.bins.cancelled.map((b) => ({ ...b })),
    },
    counters: { ...snap.counters },
    tasks: taskTable(inputs),
    eet: inputs.eet,
  };
}

function insertSorted(bin: BinEntry[], entry: BinEntry): void {
  let i = bin.length;
  while (
    i > 0 &&
    (bin[i - 1]!.time > entry.time ||
      (bin[i - 1]!.time === entry.time && bin[i - 1]!.id > entry.id))
  ) {
    i -= 1;
  }
  bin.splice(i, 0, entry);
}

function remove(list: string[], id: string): void {
  const i = list.indexOf(id);
  if (i >= 0) list.splice(i, 1);
}

/** Pull the queue head into the running slot, mirroring the engine's start
 * rule: finish at s+d if that meets the deadline, otherwise drop at the
 * deadline, or immediately when the deadline already passed. */
function promote(model: PipelineModel, machine: MachineModel, now: number): void {
  machine.running = null;
  const head = machine.queue.shift();
  if (head === undefined) return;
  const info = model.tasks.get(head);
  if (info === undefined) throw new Error(`unknown task in queue: ${head}`);
  const d = model.eet.cells[info.type]?.[machine.type];
  if (d === undefined) throw new Error(`no EET cell for (${info.type}, ${machine.type})`);
  let release: number;
  if (now + d <= info.deadline) {
    release = now + d;
  } else if (now < info.deadline) {
    release = info.deadline;
  } else {
    release = now;
  }
  machine.running = { task: head, started: now, release };
}

export interface ApplyResult {
  /** true when the delta kind cannot be applied locally; refetch the snapshot */
  resync: boolean;
}

export function applyDelta(model: PipelineModel, delta: Delta): ApplyResult {
  model.now = delta.time;
  model.eventNo = delta.event_no;
  model.counters = { ...delta.counters };
  switch (delta.kind) {
    case "arrival": {
      if (delta.task === undefined) throw new Error("arrival delta without task");
      remove(model.workload, delta.task);
      model.batch.push(delta.task);
      return { resync: false };
    }
    case "completion":
    case "deadline_drop": {
      if (delta.task === undefined || delta.machine === undefined) {
        throw new Error(`${delta.kind} delta without task/machine`);
      }
      const machine = model.machines.find((m) => m.id === delta.machine);
      if (machine === undefined) throw new Error(`unknown machine ${delta.machine}`);
      if (machine.running?.task !== delta.task) {
        // model drifted from the engine; heal from a fresh snapshot
        return { resync: true };
      }
      const bin = delta.kind === "completion" ? model.bins.completed : model.bins.missed;
      insertSorted(bin, { id: delta.task, time: delta.time });
      promote(model, machine, delta.time);
      return { resync: false };
    }
    case "scheduler_invoke":
      // mapping/cancel decisions are not streamed; rebuild from a snapshot
      return { resync: true };
  }
}
