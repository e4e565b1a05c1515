// Config form state and validation. The queue-size gate lives here: batch
// policies (min_min, max_min) cannot be submitted without a bounded machine
// queue, so the UI blocks them before anything reaches the service.

import type { SessionConfig, MachineSpec, PowerSpec } from "./types.js";
import { policyInfo } from "./types.js";

export interface ConfigForm {
  machines: MachineSpec[];
  scheduler: string;
  queueSize: number | null;
  cancellation: boolean;
  seed: number;
  until: number | null;
  power: Record<string, PowerSpec>;
}

export function defaultForm(): ConfigForm {
  return {
    machines: [
      { id: "m0", type: "quick" },
      { id: "m1", type: "steady" },
    ],
    scheduler: "mct",
    queueSize: 2,
    cancellation: false,
    seed: 0,
    until: null,
    power: {},
  };
}

/** Human-readable problems; submission is allowed only when empty. */
export function validateConfigForm(form: ConfigForm): string[] {
  const issues: string[] = [];
  if (form.machines.length === 0) issues.push("add at least one machine");
  const ids = new Set<string>();
  for (const m of form.machines) {
    if (m.id.trim() === "") issues.push("machine with empty id");
    if (m.type.trim() === "") issues.push(`machine ${m.id}: empty type`);
    if (ids.has(m.id)) issues.push(`duplicate machine id ${m.id}`);
    ids.add(m.id);
  }
  const info = policyInfo(form.scheduler);
  if (info === undefined) {
    issues.push(`unknown scheduler "${form.scheduler}"`);
  } else if (info.requiresQueueSize && form.queueSize === null) {
    issues.push(`${info.name} is a batch policy: set a machine queue size`);
  }
  if (form.queueSize !== null && (!Number.isInteger(form.queueSize) || form.queueSize < 1)) {
    issues.push("queue size must be an integer >= 1");
  }
  if (!Number.isInteger(form.seed)) issues.push("seed must be an integer");
  if (form.until !== null && !(form.until > 0)) issues.push("until must be > 0");
  for (const [t, p] of Object.entries(form.power)) {
    if (!(p.idle_watts >= 0) || !(p.busy_watts >= p.idle_watts)) {
      issues.push(`power for ${t}: need busy >= idle >= 0`);
    }
  }
  return issues;
}

export function canSubmit(form: ConfigForm): boolean {
  return validateConfigForm(form).length === 0;
}

export function toConfigPayload(form: ConfigForm): SessionConfig {
  return {
    machines: form.machines.map((m) => ({ ...m })),
    scheduler_policy: form.scheduler.toLowerCase(),
    machine_queue_size: form.queueSize,
    cancellation_enabled: form.cancellation,
    seed: form.seed,
    until: form.until,
    power_profiles: Object.fromEntries(
      Object.entries(form.power).map(([t, p]) => [t, { ...p }]),
    ),
  };
}
