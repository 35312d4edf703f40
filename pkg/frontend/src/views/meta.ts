// Meta-analysis explorer: parameter-vs-metric series with error bars and the
// algorithm x dataset matrix table. Bold highlighting comes from the API's
// best-value flags; nothing is recomputed client-side.

import { ApiClient, ApiError } from "../api.js";
import { errorBarChart } from "../charts.js";
import type { MetaMatrix, MetaTable } from "../types.js";

export function renderSeriesTable(table: MetaTable): HTMLTableElement {
  const out = document.createElement("table");
  out.className = "meta-series";
  const head = out.insertRow();
  for (const h of ["x", `${table.metric} [${table.unit}]`, "spread", "n", "failed"]) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const row of table.rows) {
    const tr = out.insertRow();
    tr.insertCell().textContent = String(row.x);
    const value = tr.insertCell();
    if (row.all_failed) {
      value.textContent = "-";
      value.className = "all-failed";
    } else {
      value.textContent = row.value === null ? "" : row.value.toPrecision(4);
    }
    tr.insertCell().textContent = row.spread === null ? "" : row.spread.toPrecision(3);
    tr.insertCell().textContent = String(row.n);
    tr.insertCell().textContent = String(row.failed_count);
  }
  return out;
}

export function renderSeriesChart(table: MetaTable): SVGElement {
  const points = table.rows.map((row) => ({
    x: typeof row.x === "number" ? row.x : Number(row.x),
    mean: row.value,
    std: row.spread,
    failed: row.all_failed,
  }));
  return errorBarChart(points);
}

export function renderMatrix(matrix: MetaMatrix): HTMLTableElement {
  const out = document.createElement("table");
  out.className = "meta-matrix";
  const head = out.insertRow();
  head.appendChild(document.createElement("th"));
  for (const col of matrix.cols) {
    const th = document.createElement("th");
    th.textContent = col;
    head.appendChild(th);
  }
  matrix.rows.forEach(([algoId, mode], i) => {
    const tr = out.insertRow();
    const th = document.createElement("th");
    th.textContent = `${algoId} (${mode})`;
    tr.appendChild(th);
    for (const cell of matrix.cells[i]) {
      const td = tr.insertCell();
      if (cell.empty) {
        td.textContent = "-";
        continue;
      }
      const rmse = document.createElement(cell.best_rmse ? "b" : "span");
      rmse.textContent = cell.ate_rmse === null ? "" : cell.ate_rmse.toFixed(3);
      rmse.className = "cell-rmse";
      td.appendChild(rmse);
      if (cell.cpu_display) {
        const cpu = document.createElement(cell.best_cpu ? "b" : "span");
        cpu.textContent = ` ${cell.cpu_display}`;
        cpu.className = "cell-cpu";
        td.appendChild(cpu);
      }
      if (cell.ram_max !== null) {
        const ram = document.createElement(cell.best_ram ? "b" : "span");
        ram.textContent = ` ${cell.ram_max.toFixed(0)}MB`;
        ram.className = "cell-ram";
        td.appendChild(ram);
      }
    }
  });
  return out;
}

export class MetaExplorerView {
  private resultSlot: HTMLElement;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.resultSlot = document.createElement("div");
  }

  mount(): void {
    this.root.innerHTML = "";
    const title = document.createElement("h2");
    title.textContent = "Meta analysis";
    this.root.appendChild(title);

    const form = document.createElement("form");
    form.innerHTML = `
      <label>x axis <input name="x_axis" placeholder="parameter or dataset attribute"></label>
      <label>metric <select name="metric">
        <option>ate_rmse</option><option>ate_mean</option><option>rpe_rmse</option>
        <option>cpu_avg</option><option>cpu_max</option><option>ram_max</option><option>wall_time</option>
      </select></label>
      <label>algorithm <input name="algorithm_id"></label>
      <label>dataset <input name="dataset_id"></label>
      <label>unit <input name="unit" placeholder="cm (optional)"></label>
      <button type="submit">Query</button>`;
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.query(new FormData(form));
    });
    this.root.appendChild(form);
    this.root.appendChild(this.resultSlot);
  }

  async query(data: FormData): Promise<void> {
    this.resultSlot.innerHTML = "";
    const body: Parameters<ApiClient["metaSeries"]>[0] = {
      x_axis: String(data.get("x_axis") ?? ""),
      metric: String(data.get("metric") ?? "ate_rmse"),
      filter: {
        algorithm_id: String(data.get("algorithm_id") ?? "") || null,
        dataset_id: String(data.get("dataset_id") ?? "") || null,
      },
    };
    const unit = String(data.get("unit") ?? "").trim();
    if (unit) body.unit = unit;
    try {
      const table = await this.api.metaSeries(body);
      this.resultSlot.appendChild(renderSeriesChart(table));
      this.resultSlot.appendChild(renderSeriesTable(table));
    } catch (err) {
      const note = document.createElement("p");
      note.className = "empty-state";
      if (err instanceof ApiError && err.code === "no_matching_runs") {
        note.textContent = "No runs match this query yet — launch some runs first.";
      } else {
        note.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      }
      this.resultSlot.appendChild(note);
    }
  }
}
