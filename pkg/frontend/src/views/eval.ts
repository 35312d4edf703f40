// Evaluation view: trajectory overlay (ground truth vs aligned estimate) plus
// ATE/RPE stat cards. All numbers come straight from the API payloads.

import { ApiClient } from "../api.js";
import { lineChart, Series } from "../charts.js";
import type { EvalRecord, PlotRecord, StatsSummary } from "../types.js";

export function parsePlotRecords(jsonl: string): PlotRecord[] {
  return jsonl
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as PlotRecord);
}

export function overlaySeries(records: PlotRecord[]): Series[] {
  const byName = new Map<string, Series>();
  const colors: Record<string, string> = { groundtruth: "#555", aligned_estimate: "#e67e22" };
  for (const r of records) {
    if (r.kind !== "xy" || r.x === undefined || r.y === undefined) continue;
    let series = byName.get(r.series);
    if (!series) {
      series = { name: r.series, points: [], color: colors[r.series] ?? "#2980b9" };
      byName.set(r.series, series);
    }
    series.points.push({ x: r.x, y: r.y });
  }
  return [...byName.values()];
}

function statsCard(title: string, stats: StatsSummary): HTMLElement {
  const card = document.createElement("div");
  card.className = "stats-card";
  const h = document.createElement("h3");
  h.textContent = title;
  card.appendChild(h);
  const dl = document.createElement("dl");
  for (const key of ["rmse", "mean", "std", "min", "max"] as const) {
    const dt = document.createElement("dt");
    dt.textContent = key;
    const dd = document.createElement("dd");
    dd.textContent = stats[key].toPrecision(4);
    dd.dataset.stat = `${title}-${key}`;
    dl.append(dt, dd);
  }
  card.appendChild(dl);
  return card;
}

export class EvalDetailView {
  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  async render(evalId: string): Promise<void> {
    this.root.innerHTML = "";
    const record: EvalRecord = await this.api.getEvaluation(evalId);
    const title = document.createElement("h2");
    title.textContent = `Evaluation ${evalId} (run ${record.run_id})`;
    this.root.appendChild(title);
    if (record.status !== "done" || !record.ate_stats || !record.rpe_stats) {
      const note = document.createElement("p");
      note.textContent = `status: ${record.status}${record.error ? ` — ${record.error}` : ""}`;
      this.root.appendChild(note);
      return;
    }
    const cards = document.createElement("div");
    cards.className = "cards";
    cards.appendChild(statsCard("ATE (m)", record.ate_stats));
    cards.appendChild(statsCard("RPE (m/m)", record.rpe_stats));
    this.root.appendChild(cards);

    const blobs = await this.api.getEvaluationSeries(evalId);
    const records = parsePlotRecords(blobs["plots"] ?? "");
    const overlay = overlaySeries(records);
    if (overlay.length > 0) {
      const h = document.createElement("h3");
      h.textContent = "Trajectory overlay (top-down)";
      this.root.appendChild(h);
      this.root.appendChild(lineChart(overlay, { width: 560, height: 360 }));
    }
  }
}
