// Run dashboard: list with status badges and a detail view that polls the run
// and its resource samples, renders CPU/RAM-over-time charts, and shows a
// completion banner once the run reaches a terminal state.

import { ApiClient } from "../api.js";
import { lineChart } from "../charts.js";
import type { ResourceSample, RunRecord } from "../types.js";
import { TERMINAL_STATES } from "../types.js";

export function stateBadge(state: string): HTMLSpanElement {
  const badge = document.createElement("span");
  badge.className = `badge badge-${state.toLowerCase()}`;
  badge.textContent = state;
  return badge;
}

export function renderRunList(runs: RunRecord[], onOpen: (runId: string) => void): HTMLElement {
  const table = document.createElement("table");
  table.className = "run-list";
  const head = table.insertRow();
  for (const h of ["run", "config", "state", "wall time"]) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const run of runs) {
    const row = table.insertRow();
    const link = document.createElement("a");
    link.textContent = run.run_id;
    link.href = `#/runs/${run.run_id}`;
    link.addEventListener("click", () => onOpen(run.run_id));
    row.insertCell().appendChild(link);
    row.insertCell().textContent = run.config_id;
    row.insertCell().appendChild(stateBadge(run.state));
    row.insertCell().textContent = run.wall_time_s != null ? `${run.wall_time_s.toFixed(1)} s` : "";
  }
  return table;
}

export class RunDetailView {
  private timer: ReturnType<typeof setInterval> | null = null;
  private banner: HTMLElement;
  private badgeSlot: HTMLElement;
  private chartSlot: HTMLElement;
  private infoSlot: HTMLElement;
  private cancelButton: HTMLButtonElement;
  public lastSamples: ResourceSample[] = [];
  public polling = false;

  constructor(
    private api: ApiClient,
    private runId: string,
    private root: HTMLElement,
    private pollIntervalMs = 2000,
  ) {
    this.root.innerHTML = "";
    const title = document.createElement("h2");
    title.textContent = `Run ${runId}`;
    this.badgeSlot = document.createElement("span");
    title.appendChild(this.badgeSlot);
    this.root.appendChild(title);

    this.banner = document.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.root.appendChild(this.banner);

    this.cancelButton = document.createElement("button");
    this.cancelButton.textContent = "Cancel run";
    this.cancelButton.addEventListener("click", () => void this.cancel());
    this.root.appendChild(this.cancelButton);

    this.infoSlot = document.createElement("dl");
    this.root.appendChild(this.infoSlot);
    this.chartSlot = document.createElement("div");
    this.chartSlot.className = "charts";
    this.root.appendChild(this.chartSlot);
  }

  start(): void {
    this.polling = true;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.pollIntervalMs);
  }

  stop(): void {
    this.polling = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async cancel(): Promise<void> {
    const record = await this.api.cancelRun(this.runId);
    this.renderRun(record); // badge flips without a reload
  }

  async tick(): Promise<void> {
    const record = await this.api.getRun(this.runId);
    this.renderRun(record);
    const resources = await this.api.getResources(this.runId);
    this.renderCharts(resources.samples);
    if (TERMINAL_STATES.includes(record.state)) {
      this.stop();
      this.banner.hidden = false;
      this.banner.textContent =
        record.state === "Succeeded"
          ? `Run completed: Succeeded`
          : `Run completed: ${record.state}${record.failure_reason ? ` — ${record.failure_reason}` : ""}`;
      this.cancelButton.disabled = true;
    }
  }

  private renderRun(record: RunRecord): void {
    this.badgeSlot.innerHTML = "";
    this.badgeSlot.appendChild(stateBadge(record.state));
    this.infoSlot.innerHTML = "";
    const entries: [string, string][] = [
      ["config", record.config_id],
      ["exit code", record.exit_code === null ? "—" : String(record.exit_code)],
      ["wall time", record.wall_time_s != null ? `${record.wall_time_s.toFixed(1)} s` : "—"],
      ["failure reason", record.failure_reason ?? "—"],
    ];
    for (const [k, v] of entries) {
      const dt = document.createElement("dt");
      dt.textContent = k;
      const dd = document.createElement("dd");
      dd.textContent = v;
      this.infoSlot.append(dt, dd);
    }
  }

  private renderCharts(samples: ResourceSample[]): void {
    this.lastSamples = samples;
    this.chartSlot.innerHTML = "";
    if (samples.length === 0) {
      this.chartSlot.textContent = "no resource samples yet";
      return;
    }
    const t0 = samples[0].t;
    this.chartSlot.appendChild(
      lineChart(
        [{ name: "cpu", color: "#2980b9", points: samples.map((s) => ({ x: s.t - t0, y: s.cpu_cores })) }],
        { yLabel: "CPU (cores)" },
      ),
    );
    this.chartSlot.appendChild(
      lineChart(
        [{ name: "ram", color: "#27ae60", points: samples.map((s) => ({ x: s.t - t0, y: s.rss_mb })) }],
        { yLabel: "RAM (MB)" },
      ),
    );
  }
}
