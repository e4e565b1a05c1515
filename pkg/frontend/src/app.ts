// Page wiring: the only module that touches the DOM directly. Everything it
// calls is pure/testable (csv, controls, viewmodel, render, controller).

import { HttpTransport, ServiceClient, ServiceError } from "./client.js";
import {
  canSubmit,
  defaultForm,
  toConfigPayload,
  validateConfigForm,
  type ConfigForm,
} from "./controls.js";
import { parseEetCsv, parseTraceCsv, serializeEetCsv, validateEetGrid, type EetGrid } from "./csv.js";
import { SessionController } from "./controller.js";
import { renderHtml } from "./render.js";
import { POLICIES } from "./types.js";

const DEFAULT_EET = "task_type,quick,steady\nA,2,3\nB,4,8\n";
const DEFAULT_TRACE =
  "task_id,task_type,arrival,deadline\n" +
  "t1,A,0,10\nt2,B,0,12\nt3,A,1,6\n";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

function setProblems(issues: string[]): void {
  el<HTMLElement>("problems").innerHTML = issues
    .map((i) => `<li>${i}</li>`)
    .join("");
}

function readForm(): ConfigForm {
  const form = defaultForm();
  form.scheduler = el<HTMLSelectElement>("scheduler").value;
  const qs = el<HTMLInputElement>("queue-size").value.trim();
  form.queueSize = qs === "" ? null : Number(qs);
  form.cancellation = el<HTMLInputElement>("cancel").checked;
  form.seed = Number(el<HTMLInputElement>("seed").value || "0");
  form.machines = el<HTMLInputElement>("machines")
    .value.split(",")
    .map((part) => part.trim())
    .filter((part) => part !== "")
    .map((part) => {
      const [id, type] = part.split("=");
      return { id: id ?? "", type: type ?? id ?? "" };
    });
  return form;
}

function gridToTable(grid: EetGrid): string {
  const head = grid.machineTypes.map((m) => `<th>${m}</th>`).join("");
  const rows = grid.taskTypes
    .map((t) => {
      const cells = grid.machineTypes
        .map(
          (m) =>
            `<td><input data-task="${t}" data-machine="${m}" value="${grid.cells[t]?.[m]}"></td>`,
        )
        .join("");
      return `<tr><th>${t}</th>${cells}</tr>`;
    })
    .join("");
  return `<table><tr><th>task \\ machine</th>${head}</tr>${rows}</table>`;
}

function readGrid(container: HTMLElement, base: EetGrid): EetGrid {
  const grid: EetGrid = {
    taskTypes: [...base.taskTypes],
    machineTypes: [...base.machineTypes],
    cells: Object.fromEntries(base.taskTypes.map((t) => [t, {} as Record<string, number>])),
  };
  container.querySelectorAll<HTMLInputElement>("input[data-task]").forEach((input) => {
    const t = input.dataset.task as string;
    const m = input.dataset.machine as string;
    grid.cells[t]![m] = Number(input.value);
  });
  return grid;
}

async function main(): Promise<void> {
  const client = new ServiceClient(new HttpTransport(""));
  let controller: SessionController | null = null;
  let grid = parseEetCsv(DEFAULT_EET);

  const schedulerSel = el<HTMLSelectElement>("scheduler");
  schedulerSel.innerHTML = POLICIES.map(
    (p) => `<option value="${p.name}">${p.label}</option>`,
  ).join("");
  schedulerSel.value = "mct";
  el<HTMLTextAreaElement>("trace").value = DEFAULT_TRACE;
  const gridBox = el<HTMLElement>("eet-grid");
  gridBox.innerHTML = gridToTable(grid);

  const revalidate = (): void => {
    grid = readGrid(gridBox, grid);
    const issues = [...validateConfigForm(readForm()), ...validateEetGrid(grid)];
    setProblems(issues);
    el<HTMLButtonElement>("start").disabled = issues.length > 0;
  };
  ["scheduler", "queue-size", "cancel", "seed", "machines"].forEach((id) =>
    el(id).addEventListener("input", revalidate),
  );
  gridBox.addEventListener("input", revalidate);
  revalidate();

  const rerender = (): void => {
    if (controller?.model) {
      el("pipeline").innerHTML = renderHtml(controller.rendered());
    }
  };

  el("start").addEventListener("click", () => {
    void (async () => {
      const form = readForm();
      if (!canSubmit(form)) return;
      grid = readGrid(gridBox, grid);
      const traceText = el<HTMLTextAreaElement>("trace").value;
      try {
        const trace = parseTraceCsv(traceText);
        const sid = await client.createSession(toConfigPayload(form));
        await client.loadWorkload(sid, serializeEetCsv(grid), traceText);
        controller?.close();
        controller = new SessionController(client, sid, { eet: grid, trace });
        controller.onChange = rerender;
        await controller.refresh();
        setProblems([]);
      } catch (err) {
        setProblems([err instanceof ServiceError ? err.message : String(err)]);
      }
    })();
  });

  const guard = (fn: (c: SessionController) => Promise<void>) => (): void => {
    if (controller !== null) {
      fn(controller).catch((err) => setProblems([String(err)]));
    }
  };
  el("step").addEventListener("click", guard((c) => c.step()));
  el("play").addEventListener(
    "click",
    guard((c) => c.play(Number(el<HTMLInputElement>("speed").value || "1"))),
  );
  el("pause").addEventListener("click", guard((c) => c.pause()));
  el("reset").addEventListener("click", guard((c) => c.reset()));
}

document.addEventListener("DOMContentLoaded", () => {
  void main();
});
