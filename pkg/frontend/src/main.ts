// Single-page entry point: hash routing between the registry lists, the config
// form, the run dashboard, evaluations, and the meta explorer.

import { ApiClient } from "./api.js";
import { ConfigFormView } from "./views/config.js";
import { EvalDetailView } from "./views/eval.js";
import { MetaExplorerView } from "./views/meta.js";
import { RunDetailView, renderRunList } from "./views/runs.js";

const api = new ApiClient("");
let activeRunView: RunDetailView | null = null;

function outlet(): HTMLElement {
  return document.getElementById("outlet") as HTMLElement;
}

function stopActivePollers(): void {
  if (activeRunView) {
    activeRunView.stop();
    activeRunView = null;
  }
}

async function showHome(): Promise<void> {
  const root = outlet();
  root.innerHTML = "<h2>Algorithms</h2>";
  const [algos, datasets] = await Promise.all([api.listAlgorithms(), api.listDatasets()]);
  const algoList = document.createElement("ul");
  for (const a of algos.items) {
    const li = document.createElement("li");
    li.textContent = `${a.id} — modes: ${a.modes.join(", ")} — ${a.params.length} parameters`;
    algoList.appendChild(li);
  }
  root.appendChild(algoList);
  const h = document.createElement("h2");
  h.textContent = "Datasets";
  root.appendChild(h);
  const dsList = document.createElement("ul");
  for (const d of datasets.items) {
    const li = document.createElement("li");
    li.textContent = `${d.id} (${d.sequence_name}) — length ${d.length_m?.toFixed(2) ?? "?"} m`;
    dsList.appendChild(li);
  }
  root.appendChild(dsList);
}

async function showConfigForm(): Promise<void> {
  const [algos, datasets] = await Promise.all([api.listAlgorithms(), api.listDatasets()]);
  new ConfigFormView(api, algos.items, datasets.items, outlet());
}

async function showRuns(): Promise<void> {
  const root = outlet();
  root.innerHTML = "<h2>Runs</h2>";
  const runs = await api.listRuns({ limit: "200" });
  root.appendChild(renderRunList(runs.items, (runId) => void route(`#/runs/${runId}`)));
}

function showRunDetail(runId: string): void {
  activeRunView = new RunDetailView(api, runId, outlet());
  activeRunView.start();
}

async function showEvaluations(): Promise<void> {
  const root = outlet();
  root.innerHTML = "<h2>Evaluations</h2>";
  const evals = await api.listEvaluations();
  const list = document.createElement("ul");
  for (const e of evals.items) {
    const li = document.createElement("li");
    const a = document.createElement("a");
    a.href = `#/evaluations/${e.eval_id}`;
    a.textContent = `${e.eval_id} (run ${e.run_id})`;
    li.appendChild(a);
    if (e.ate_stats) li.append(` — ATE rmse ${e.ate_stats.rmse.toPrecision(4)} m`);
    list.appendChild(li);
  }
  root.appendChild(list);
}

async function route(hash: string): Promise<void> {
  stopActivePollers();
  const parts = hash.replace(/^#\/?/, "").split("/");
  try {
    if (parts[0] === "" || parts[0] === "home") await showHome();
    else if (parts[0] === "configs") await showConfigForm();
    else if (parts[0] === "runs" && parts[1]) showRunDetail(parts[1]);
    else if (parts[0] === "runs") await showRuns();
    else if (parts[0] === "evaluations" && parts[1]) await new EvalDetailView(api, outlet()).render(parts[1]);
    else if (parts[0] === "evaluations") await showEvaluations();
    else if (parts[0] === "meta") new MetaExplorerView(api, outlet()).mount();
    else outlet().textContent = "Page not found.";
  } catch (err) {
    outlet().innerHTML = `<p class="empty-state">Could not load this page: ${String(err)}</p>`;
  }
}

window.addEventListener("hashchange", () => void route(location.hash));
window.addEventListener("DOMContentLoaded", () => void route(location.hash));
