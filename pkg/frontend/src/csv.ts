// Client-side parsing of the two CSV inputs (EET matrix, task trace) plus
// the validation the grid editor shows inline. The service re-validates;
// this is the fast path that keeps bad uploads from ever leaving the page.

export interface EetGrid {
  taskTypes: string[];
  machineTypes: string[];
  /** cells[taskType][machineType] = expected execution time */
  cells: Record<string, Record<string, number>>;
}

export interface TraceRow {
  taskId: string;
  taskType: string;
  arrival: number;
  deadline: number;
}

function splitCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.trim() !== "")
    .map((line) => line.split(",").map((f) => f.trim()));
}

export function parseEetCsv(text: string): EetGrid {
  const rows = splitCsv(text);
  const header = rows[0];
  if (!header || header[0] !== "task_type") {
    throw new Error('EET header must start with "task_type"');
  }
  const machineTypes = header.slice(1);
  const grid: EetGrid = { taskTypes: [], machineTypes, cells: {} };
  for (const row of rows.slice(1)) {
    const taskType = row[0];
    if (taskType === undefined) continue;
    grid.taskTypes.push(taskType);
    const cells: Record<string, number> = {};
    machineTypes.forEach((m, i) => {
      cells[m] = Number(row[i + 1]);
    });
    grid.cells[taskType] = cells;
  }
  const issues = validateEetGrid(grid);
  if (issues.length > 0) throw new Error(issues.join("; "));
  return grid;
}

/** Returns human-readable problems; an empty list means the grid is sound. */
export function validateEetGrid(grid: EetGrid): string[] {
  const issues: string[] = [];
  if (grid.machineTypes.length === 0) issues.push("no machine type columns");
  if (grid.taskTypes.length === 0) issues.push("no task type rows");
  if (new Set(grid.machineTypes).size !== grid.machineTypes.length) {
    issues.push("duplicate machine type column");
  }
  if (new Set(grid.taskTypes).size !== grid.taskTypes.length) {
    issues.push("duplicate task type row");
  }
  for (const t of grid.taskTypes) {
    for (const m of grid.machineTypes) {
      const v = grid.cells[t]?.[m];
      if (v === undefined || Number.isNaN(v)) {
        issues.push(`cell (${t}, ${m}) is not a number`);
      } else if (!Number.isFinite(v) || v <= 0) {
        issues.push(`cell (${t}, ${m}) must be a finite number > 0`);
      }
    }
  }
  return issues;
}

export function serializeEetCsv(grid: EetGrid): string {
  const lines = [["task_type", ...grid.machineTypes].join(",")];
  for (const t of grid.taskTypes) {
    lines.push([t, ...grid.machineTypes.map((m) => String(grid.cells[t]?.[m]))].join(","));
  }
  return lines.join("\n") + "\n";
}

const TRACE_HEADER = ["task_id", "task_type", "arrival", "deadline"];

export function parseTraceCsv(text: string): TraceRow[] {
  const rows = splitCsv(text);
  const header = rows[0];
  if (!header || TRACE_HEADER.some((h, i) => header[i] !== h)) {
    throw new Error(`trace header must be "${TRACE_HEADER.join(",")}"`);
  }
  const out: TraceRow[] = [];
  for (const row of rows.slice(1)) {
    const [taskId, taskType, arrival, deadline] = row;
    if (taskId === undefined || taskType === undefined) {
      throw new Error(`short trace row: ${row.join(",")}`);
    }
    const a = Number(arrival);
    const d = Number(deadline);
    if (!Number.isFinite(a) || !Number.isFinite(d) || d <= a) {
      throw new Error(`task ${taskId}: need finite arrival < deadline`);
    }
    out.push({ taskId, taskType, arrival: a, deadline: d });
  }
  return out;
}
