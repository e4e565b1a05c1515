// Drives one session: wires control actions, the delta stream, and the view
// model together. UI-framework-free so tests can drive it with a replayed
// transport exactly like the page does.
//
// All deltas are applied strictly in arrival order by a single drain loop,
// so the HTTP response of a control call and the websocket frame it caused
// can land in either order without corrupting the model.

import type { ServiceClient } from "./client.js";
import type { Delta, SessionStatus } from "./types.js";
import type { PipelineModel, WorkloadInputs } from "./viewmodel.js";
import { applyDelta, fromSnapshot } from "./viewmodel.js";
import { renderPipeline, type RenderedPipeline } from "./render.js";

interface EventWaiter {
  target: number;
  resolve: () => void;
}

export class SessionController {
  model: PipelineModel | null = null;
  onChange: (() => void) | null = null;

  private pending: Delta[] = [];
  private draining: Promise<void> = Promise.resolve();
  private waiters: EventWaiter[] = [];
  private readonly unsubscribe: () => void;

  constructor(
    private readonly client: ServiceClient,
    readonly sessionId: string,
    private readonly inputs: WorkloadInputs,
  ) {
    this.unsubscribe = client.subscribe(sessionId, (d) => this.onDelta(d));
  }

  close(): void {
    this.unsubscribe();
  }

  /** Fetch a snapshot and rebuild the model from scratch. */
  async refresh(): Promise<void> {
    const snap = await this.client.snapshot(this.sessionId);
    this.model = fromSnapshot(snap, this.inputs);
    this.onChange?.();
    this.wake();
  }

  rendered(): RenderedPipeline {
    if (this.model === null) throw new Error("no model yet; call refresh()");
    return renderPipeline(this.model);
  }

  /** Advance one event and wait until its delta has been applied. */
  async step(): Promise<void> {
    const target = (this.model?.eventNo ?? 0) + 1;
    const r = await this.client.control(this.sessionId, "step");
    await this.whenApplied(target);
    this.setStatus(r.status);
  }

  async play(speed: number | "max"): Promise<void> {
    await this.client.control(this.sessionId, "run", speed);
    this.setStatus("running");
  }

  async pause(): Promise<void> {
    const r = await this.client.control(this.sessionId, "pause");
    await this.draining;
    this.setStatus(r.status);
  }

  async reset(): Promise<void> {
    await this.client.control(this.sessionId, "reset");
    await this.draining;
    this.pending = [];
    await this.refresh();
  }

  // --- delta plumbing ---------------------------------------------------------

  private onDelta(delta: Delta): void {
    this.pending.push(delta);
    this.draining = this.draining.then(() => this.drain());
  }

  private async drain(): Promise<void> {
    for (let d = this.pending.shift(); d !== undefined; d = this.pending.shift()) {
      await this.applyOne(d);
    }
  }

  private async applyOne(delta: Delta): Promise<void> {
    if (this.model === null) {
      await this.refresh();
      return;
    }
    const { resync } = applyDelta(this.model, delta);
    if (resync) {
      // scheduler rounds (and any drift) rebuild from the authoritative state
      await this.refresh();
    } else {
      this.onChange?.();
      this.wake();
    }
  }

  private setStatus(status: SessionStatus): void {
    if (this.model !== null && this.model.status !== status) {
      this.model.status = status;
      this.onChange?.();
    }
  }

  private whenApplied(target: number): Promise<void> {
    if (this.model !== null && this.model.eventNo >= target) return Promise.resolve();
    return new Promise((resolve) => this.waiters.push({ target, resolve }));
  }

  private wake(): void {
    const done = this.model?.eventNo ?? 0;
    this.waiters = this.waiters.filter((w) => {
      if (w.target <= done) {
        w.resolve();
        return false;
      }
      return true;
    });
  }
}
