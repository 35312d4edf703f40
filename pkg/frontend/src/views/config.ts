// Config creation form: algorithm + mode + dataset pickers, parameter fields
// generated from ParamSpec, inline validation mirroring the server's domains,
// copy-and-modify prefill, and grid mode with a live combination-count preview.

import { ApiClient, ApiError } from "../api.js";
import {
  FormField,
  GridAxis,
  countCombinations,
  fieldsFromSpecs,
  parseAxis,
  validateForm,
} from "../form.js";
import type { Algorithm, Dataset, MappingConfig } from "../types.js";

export class ConfigFormView {
  public fields: FormField[] = [];
  public gridRaw: Record<string, string> = {}; // param name -> comma list
  public repeats = 1;
  private paramSlot: HTMLElement;
  private previewSlot: HTMLElement;
  private resultSlot: HTMLElement;
  private submitButton: HTMLButtonElement;
  private algoSelect: HTMLSelectElement;
  private modeSelect: HTMLSelectElement;
  private datasetSelect: HTMLSelectElement;
  private gridMode = false;

  constructor(
    private api: ApiClient,
    private algorithms: Algorithm[],
    datasets: Dataset[],
    private root: HTMLElement,
  ) {
    this.root.innerHTML = "";
    const title = document.createElement("h2");
    title.textContent = "New configuration";
    this.root.appendChild(title);

    this.algoSelect = this.select(
      "algorithm",
      algorithms.map((a) => a.id),
    );
    this.modeSelect = this.select("mode", algorithms[0]?.modes ?? []);
    this.datasetSelect = this.select(
      "dataset",
      datasets.map((d) => d.id),
    );
    this.algoSelect.addEventListener("change", () => this.onAlgorithmChange());

    const gridToggle = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () => {
      this.gridMode = box.checked;
      this.renderParams();
    });
    gridToggle.append(box, document.createTextNode(" grid mode (comma-separated values per field)"));
    this.root.appendChild(gridToggle);

    this.paramSlot = document.createElement("div");
    this.paramSlot.className = "params";
    this.root.appendChild(this.paramSlot);

    this.previewSlot = document.createElement("div");
    this.previewSlot.className = "preview";
    this.root.appendChild(this.previewSlot);

    this.submitButton = document.createElement("button");
    this.submitButton.textContent = "Create";
    this.submitButton.addEventListener("click", () => void this.submit());
    this.root.appendChild(this.submitButton);

    this.resultSlot = document.createElement("div");
    this.resultSlot.className = "result";
    this.root.appendChild(this.resultSlot);

    this.onAlgorithmChange();
  }

  private select(label: string, options: string[]): HTMLSelectElement {
    const wrap = document.createElement("label");
    wrap.textContent = `${label}: `;
    const sel = document.createElement("select");
    sel.name = label;
    for (const opt of options) {
      const o = document.createElement("option");
      o.value = opt;
      o.textContent = opt;
      sel.appendChild(o);
    }
    wrap.appendChild(sel);
    this.root.appendChild(wrap);
    return sel;
  }

  get algorithm(): Algorithm | undefined {
    return this.algorithms.find((a) => a.id === this.algoSelect.value);
  }

  private onAlgorithmChange(): void {
    const algo = this.algorithm;
    this.modeSelect.innerHTML = "";
    for (const mode of algo?.modes ?? []) {
      const o = document.createElement("option");
      o.value = mode;
      o.textContent = mode;
      this.modeSelect.appendChild(o);
    }
    this.fields = fieldsFromSpecs(algo?.params ?? []);
    this.gridRaw = {};
    this.renderParams();
  }

  /** Prefill every field from an existing config (copy-and-modify workflow). */
  prefill(config: MappingConfig): void {
    this.algoSelect.value = config.algorithm_id;
    this.onAlgorithmChange();
    this.modeSelect.value = config.mode;
    this.datasetSelect.value = config.dataset_id;
    for (const field of this.fields) {
      if (field.spec.name in config.algo_params) {
        field.raw = String(config.algo_params[field.spec.name]);
      }
    }
    this.renderParams();
  }

  setField(name: string, raw: string): void {
    const field = this.fields.find((f) => f.spec.name === name);
    if (field) field.raw = raw;
    this.renderParams();
  }

  setGridAxis(name: string, raw: string): void {
    this.gridRaw[name] = raw;
    this.renderParams();
  }

  get axes(): GridAxis[] {
    const out: GridAxis[] = [];
    for (const field of this.fields) {
      const raw = this.gridRaw[field.spec.name];
      if (!raw || !raw.trim()) continue;
      const axis = parseAxis(field.spec, raw);
      if (axis) out.push(axis);
    }
    return out;
  }

  renderParams(): void {
    this.paramSlot.innerHTML = "";
    const validation = validateForm(this.fields);
    for (const field of this.fields) {
      const row = document.createElement("div");
      row.className = "field";
      const label = document.createElement("label");
      label.textContent = field.spec.name;
      const input = document.createElement("input");
      input.name = field.spec.name;
      input.value = this.gridMode ? (this.gridRaw[field.spec.name] ?? "") : field.raw;
      input.addEventListener("input", () => {
        if (this.gridMode) this.setGridAxis(field.spec.name, input.value);
        else this.setField(field.spec.name, input.value);
      });
      row.append(label, input);
      if (!this.gridMode && validation.violations[field.spec.name]) {
        const err = document.createElement("span");
        err.className = "violation";
        err.textContent = validation.violations[field.spec.name];
        row.appendChild(err);
      }
      this.paramSlot.appendChild(row);
    }
    if (this.gridMode) {
      const count = countCombinations(this.axes, this.repeats);
      this.previewSlot.textContent = `${count} configurations`;
      this.submitButton.disabled = false;
      this.submitButton.textContent = "Generate";
    } else {
      this.previewSlot.textContent = "";
      this.submitButton.disabled = !validation.submittable;
      this.submitButton.textContent = "Create";
    }
  }

  async submit(): Promise<void> {
    this.resultSlot.textContent = "";
    this.resultSlot.classList.remove("error");
    const base = {
      algorithm_id: this.algoSelect.value,
      mode: this.modeSelect.value,
      dataset_id: this.datasetSelect.value,
    };
    try {
      if (this.gridMode) {
        const out = await this.api.generateConfigs({
          base,
          axes: this.axes,
          repeats: this.repeats,
          dry_run: false,
        });
        this.resultSlot.textContent = `created ${out.count} configurations`;
      } else {
        const validation = validateForm(this.fields);
        if (!validation.submittable) return;
        const created = await this.api.createConfig({ ...base, algo_params: validation.values });
        this.resultSlot.textContent = `created config ${created.config_id}`;
      }
    } catch (err) {
      this.resultSlot.classList.add("error");
      this.resultSlot.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
  }
}
