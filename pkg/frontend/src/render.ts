// Rendering is split in two pure stages: PipelineModel -> RenderedPipeline
// (the display values, all numbers formatted) -> HTML string. Tests compare
// RenderedPipeline structures and the HTML; the DOM is set from the same
// string, so equal rendered pipelines mean identical pages.

import type { PipelineModel } from "./viewmodel.js";
import type { Counters, SessionStatus } from "./types.js";

export interface RenderedBinEntry {
  id: string;
  at: string;
}

export interface RenderedMachine {
  id: string;
  type: string;
  running: { task: string; remaining: string } | null;
  queue: string[];
}

export interface RenderedPipeline {
  status: SessionStatus;
  now: string;
  workload: string[];
  batch: string[];
  machines: RenderedMachine[];
  completed: RenderedBinEntry[];
  missed: RenderedBinEntry[];
  cancelled: RenderedBinEntry[];
  counters: Counters;
}

const fmt = (x: number): string => x.toFixed(3);

export function renderPipeline(model: PipelineModel): RenderedPipeline {
  return {
    status: model.status,
    now: fmt(model.now),
    workload: [...model.workload],
    batch: [...model.batch],
    machines: model.machines.map((m) => ({
      id: m.id,
      type: m.type,
      running:
        m.running === null
          ? null
          : { task: m.running.task, remaining: fmt(m.running.release - model.now) },
      queue: [...m.queue],
    })),
    completed: model.bins.completed.map((b) => ({ id: b.id, at: fmt(b.time) })),
    missed: model.bins.missed.map((b) => ({ id: b.id, at: fmt(b.time) })),
    cancelled: model.bins.cancelled.map((b) => ({ id: b.id, at: fmt(b.time) })),
    counters: { ...model.counters },
  };
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function idList(ids: string[]): string {
  if (ids.length === 0) return '<span class="empty">(empty)</span>';
  return ids.map((id) => `<span class="chip">${esc(id)}</span>`).join("");
}

function binList(entries: RenderedBinEntry[]): string {
  if (entries.length === 0) return '<span class="empty">(none)</span>';
  return entries
    .map((e) => `<span class="chip">${esc(e.id)} @ ${e.at}</span>`)
    .join("");
}

export function renderHtml(r: RenderedPipeline): string {
  const machines = r.machines
    .map((m) => {
      const running =
        m.running === null
          ? '<span class="empty">idle</span>'
          : `<span class="chip running">${esc(m.running.task)} (${m.running.remaining}s left)</span>`;
      return `<div class="machine" data-machine="${esc(m.id)}">
  <h4>${esc(m.id)} <small>${esc(m.type)}</small></h4>
  <div class="slot">${running}</div>
  <div class="queue">${idList(m.queue)}</div>
</div>`;
    })
    .join("\n");
  const c = r.counters;
  return `<div class="pipeline" data-status="${r.status}">
<div class="clock">t = ${r.now} &mdash; ${r.status}</div>
<div class="counters">arrived ${c.arrived} / completed ${c.completed} / missed ${c.missed} / cancelled ${c.cancelled} / in system ${c.in_system}</div>
<section class="col workload"><h3>Workload</h3>${idList(r.workload)}</section>
<section class="col batch"><h3>Batch queue</h3>${idList(r.batch)}</section>
<section class="col machines"><h3>Machines</h3>
${machines}
</section>
<section class="col completed"><h3>Completed</h3>${binList(r.completed)}</section>
<section class="col missed"><h3>Missed</h3>${binList(r.missed)}</section>
<section class="col cancelled"><h3>Cancelled</h3>${binList(r.cancelled)}</section>
</div>`;
}
