// Shared test plumbing: fixture loading and a transport that replays the
// recorded service payloads (tests/fixtures/*, written by
// scripts/record_ui_fixtures.py in the simulator repo).

import { readFileSync } from "node:fs";

import type { RequestBody, Transport } from "../src/client.js";
import { parseEetCsv, parseTraceCsv } from "../src/csv.js";
import type { Delta, Snapshot } from "../src/types.js";
import type { WorkloadInputs } from "../src/viewmodel.js";

export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

export interface ScenarioFixtures {
  ready: Snapshot;
  deltas: Delta[];
  snapshots: Snapshot[];
}

export function loadScenario(name: string): ScenarioFixtures {
  return {
    ready: loadFixture<Snapshot>(`${name}_ready_snapshot.json`),
    deltas: loadFixture<Delta[]>(`${name}_deltas.json`),
    snapshots: loadFixture<Snapshot[]>(`${name}_step_snapshots.json`),
  };
}

const S1_EET_CSV = "task_type,fast,slow\nA,2,4\nB,4,10\n";
const S1_TRACE_CSV =
  "task_id,task_type,arrival,deadline\nt1,A,0,10\nt2,B,0,12\nt3,A,1,6\n";
const MIXED_TRACE_CSV =
  "task_id,task_type,arrival,deadline\nt1,A,0,10\nt2,B,0,12\nt3,A,1,6\nt4,B,1,4\n";

export function inputsFor(name: "s1" | "mixed"): WorkloadInputs {
  return {
    eet: parseEetCsv(S1_EET_CSV),
    trace: parseTraceCsv(name === "s1" ? S1_TRACE_CSV : MIXED_TRACE_CSV),
  };
}

/** Serves recorded payloads: each step control emits the next recorded
 * delta (async, like a real socket) and snapshot GETs return the snapshot
 * taken after the last consumed event. */
export class ReplayTransport implements Transport {
  /** how often the client fell back to a full snapshot GET */
  snapshotGets = 0;

  private steps = 0;
  private onDelta: ((d: Delta) => void) | null = null;

  constructor(private readonly fx: ScenarioFixtures) {}

  request(method: string, path: string, body?: RequestBody): Promise<unknown> {
    if (method === "POST" && path.endsWith("/control")) {
      const data = body?.kind === "json" ? (body.data as { action: string }) : null;
      if (data?.action !== "step") {
        return Promise.reject(new Error(`replay only supports step, got ${data?.action}`));
      }
      const delta = this.fx.deltas[this.steps];
      const snap = this.fx.snapshots[this.steps];
      if (delta === undefined || snap === undefined) {
        return Promise.reject(new Error("stepped past the recorded run"));
      }
      this.steps += 1;
      queueMicrotask(() => this.onDelta?.(structuredClone(delta)));
      return Promise.resolve({ status: snap.status });
    }
    if (method === "GET" && path.endsWith("/snapshot")) {
      this.snapshotGets += 1;
      const snap = this.steps === 0 ? this.fx.ready : this.fx.snapshots[this.steps - 1];
      return Promise.resolve(structuredClone(snap));
    }
    return Promise.reject(new Error(`replay transport: unexpected ${method} ${path}`));
  }

  openEvents(_sessionId: string, onDelta: (delta: Delta) => void): () => void {
    this.onDelta = onDelta;
    return () => {
      this.onDelta = null;
    };
  }
}
