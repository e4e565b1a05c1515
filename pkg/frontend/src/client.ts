// Thin typed wrapper over the session service. All server interaction goes
// through the Transport interface so tests can replay recorded payloads
// without a network.

import type { Delta, Report, SessionConfig, SessionStatus, Snapshot } from "./types.js";

export type RequestBody =
  | { kind: "json"; data: unknown }
  | { kind: "workload"; eetCsv: string; traceCsv: string };

export interface Transport {
  request(method: string, path: string, body?: RequestBody): Promise<unknown>;
  /** Start streaming event deltas for a session; returns an unsubscribe fn. */
  openEvents(sessionId: string, onDelta: (delta: Delta) => void): () => void;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

/** fetch/WebSocket transport for the browser. */
export class HttpTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  async request(method: string, path: string, body?: RequestBody): Promise<unknown> {
    const init: RequestInit = { method };
    if (body?.kind === "json") {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body.data);
    } else if (body?.kind === "workload") {
      const form = new FormData();
      form.append("eet", new Blob([body.eetCsv], { type: "text/csv" }), "eet.csv");
      form.append("trace", new Blob([body.traceCsv], { type: "text/csv" }), "trace.csv");
      init.body = form;
    }
    const resp = await fetch(this.baseUrl + path, init);
    const payload: unknown = await resp.json();
    if (!resp.ok) {
      const err = payload as { error?: string; detail?: string };
      throw new ServiceError(resp.status, err.error ?? "Error", err.detail ?? resp.statusText);
    }
    return payload;
  }

  openEvents(sessionId: string, onDelta: (delta: Delta) => void): () => void {
    const wsUrl =
      this.baseUrl.replace(/^http/, "ws") + `/sessions/${sessionId}/events`;
    const ws = new WebSocket(wsUrl);
    ws.onmessage = (ev) => onDelta(JSON.parse(String(ev.data)) as Delta);
    return () => ws.close();
  }
}

export type ControlAction = "step" | "pause" | "reset" | "run";

export class ServiceClient {
  constructor(private readonly transport: Transport) {}

  async createSession(config: SessionConfig): Promise<string> {
    const r = (await this.transport.request("POST", "/sessions", {
      kind: "json",
      data: config,
    })) as { id: string };
    return r.id;
  }

  async loadWorkload(id: string, eetCsv: string, traceCsv: string): Promise<SessionStatus> {
    const r = (await this.transport.request("PUT", `/sessions/${id}/workload`, {
      kind: "workload",
      eetCsv,
      traceCsv,
    })) as { status: SessionStatus };
    return r.status;
  }

  async control(
    id: string,
    action: ControlAction,
    speed?: number | "max",
  ): Promise<{ status: SessionStatus }> {
    const data: Record<string, unknown> = { action };
    if (speed !== undefined) data.speed = speed;
    return (await this.transport.request("POST", `/sessions/${id}/control`, {
      kind: "json",
      data,
    })) as { status: SessionStatus };
  }

  async snapshot(id: string): Promise<Snapshot> {
    return (await this.transport.request("GET", `/sessions/${id}/snapshot`)) as Snapshot;
  }

  async report(id: string): Promise<Report> {
    return (await this.transport.request("GET", `/sessions/${id}/report`)) as Report;
  }

  async patchEetCell(
    id: string,
    taskType: string,
    machineType: string,
    value: number,
  ): Promise<void> {
    await this.transport.request("PATCH", `/sessions/${id}/eet`, {
      kind: "json",
      data: { task_type: taskType, machine_type: machineType, value },
    });
  }

  subscribe(id: string, onDelta: (delta: Delta) => void): () => void {
    return this.transport.openEvents(id, onDelta);
  }
}
