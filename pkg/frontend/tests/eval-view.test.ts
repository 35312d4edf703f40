import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { EvalDetailView, overlaySeries, parsePlotRecords } from "../src/views/eval";
import { mockFetch } from "./mock";

function plotsJsonl(estOffset: number): string {
  const lines: string[] = [];
  for (let i = 0; i < 5; i++) {
    lines.push(JSON.stringify({ kind: "xy", series: "groundtruth", t: i, x: i * 0.1, y: 0 }));
  }
  for (let i = 0; i < 5; i++) {
    lines.push(JSON.stringify({ kind: "xy", series: "aligned_estimate", t: i, x: i * 0.1 + estOffset, y: estOffset }));
  }
  lines.push(JSON.stringify({ kind: "error", series: "ate", t: 0, value: 0 }));
  return lines.join("\n") + "\n";
}

const stats = { min: 0, max: 0, mean: 0, std: 0, rmse: 0, count: 5 };

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("plot record parsing", () => {
  it("splits jsonl into typed records and groups xy series", () => {
    const records = parsePlotRecords(plotsJsonl(0.5));
    expect(records).toHaveLength(11);
    const series = overlaySeries(records);
    expect(series.map((s) => s.name).sort()).toEqual(["aligned_estimate", "groundtruth"]);
    expect(series[0].points).toHaveLength(5);
  });
});

describe("EvalDetailView", () => {
  async function render(offset: number) {
    const route = mockFetch((path) => {
      if (path === "/api/evaluations/e1")
        return {
          body: {
            eval_id: "e1",
            run_id: "r1",
            status: "done",
            ate_stats: { ...stats, rmse: offset },
            rpe_stats: stats,
            pairs_used: 5,
            series_refs: { plots: "blobs/r1/plots.jsonl" },
          },
        };
      if (path === "/api/evaluations/e1/series") return { body: { plots: plotsJsonl(offset) } };
      return null;
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    await new EvalDetailView(new ApiClient("", route), root).render("e1");
    return root;
  }

  it("perfect run: overlay curves coincide (identical polyline geometry)", async () => {
    const root = await render(0);
    const polylines = [...root.querySelectorAll("polyline")];
    const gt = polylines.find((p) => p.getAttribute("data-series") === "groundtruth");
    const est = polylines.find((p) => p.getAttribute("data-series") === "aligned_estimate");
    expect(gt).toBeDefined();
    expect(est).toBeDefined();
    expect(est!.getAttribute("points")).toBe(gt!.getAttribute("points"));
  });

  it("imperfect run: curves differ and stat cards echo API values verbatim", async () => {
    const root = await render(0.5);
    const polylines = [...root.querySelectorAll("polyline")];
    const gt = polylines.find((p) => p.getAttribute("data-series") === "groundtruth");
    const est = polylines.find((p) => p.getAttribute("data-series") === "aligned_estimate");
    expect(est!.getAttribute("points")).not.toBe(gt!.getAttribute("points"));
    const rmse = root.querySelector('[data-stat="ATE (m)-rmse"]');
    expect(rmse?.textContent).toBe((0.5).toPrecision(4));
  });

  it("pending evaluation renders its status instead of charts", async () => {
    const route = mockFetch((path) =>
      path === "/api/evaluations/e2" ? { body: { eval_id: "e2", run_id: "r1", status: "pending" } } : null,
    );
    const root = document.createElement("div");
    document.body.appendChild(root);
    await new EvalDetailView(new ApiClient("", route), root).render("e2");
    expect(root.textContent).toMatch(/status: pending/);
    expect(root.querySelector("svg")).toBeNull();
  });
});
