// Thin typed client over the documented JSON API. All errors surface as
// ApiError carrying the machine-readable code from the response body.

import type {
  Algorithm,
  ApiErrorBody,
  Dataset,
  EvalRecord,
  MappingConfig,
  MetaMatrix,
  MetaTable,
  ResourcesPayload,
  RunRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: unknown = null,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (i, init) => fetch(i, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let parsed: ApiErrorBody | null = null;
      try {
        parsed = (await resp.json()) as ApiErrorBody;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(
        resp.status,
        parsed?.code ?? String(resp.status),
        parsed?.message ?? resp.statusText,
        parsed?.details ?? null,
      );
    }
    const text = await resp.text();
    return (text ? JSON.parse(text) : null) as T;
  }

  private async requestText(path: string): Promise<string> {
    const resp = await this.fetchImpl(this.base + path, { method: "GET" });
    if (!resp.ok) throw new ApiError(resp.status, String(resp.status), resp.statusText);
    return resp.text();
  }

  listAlgorithms(): Promise<{ items: Algorithm[] }> {
    return this.request("GET", "/api/algorithms");
  }

  listDatasets(): Promise<{ items: Dataset[] }> {
    return this.request("GET", "/api/datasets");
  }

  listConfigs(limit = 100, cursor?: string): Promise<{ items: MappingConfig[]; next_cursor: string | null }> {
    const qs = cursor ? `?limit=${limit}&cursor=${encodeURIComponent(cursor)}` : `?limit=${limit}`;
    return this.request("GET", `/api/configs${qs}`);
  }

  getConfig(configId: string): Promise<MappingConfig> {
    return this.request("GET", `/api/configs/${configId}`);
  }

  createConfig(body: Partial<MappingConfig>): Promise<MappingConfig> {
    return this.request("POST", "/api/configs", body);
  }

  generateConfigs(body: {
    base: Partial<MappingConfig>;
    axes: { name: string; values: unknown[] }[];
    repeats: number;
    dry_run: boolean;
  }): Promise<{ count: number; ids: string[]; dry_run: boolean }> {
    return this.request("POST", "/api/configs/generate", body);
  }

  listRuns(params: Record<string, string> = {}): Promise<{ items: RunRecord[]; next_cursor: string | null }> {
    const qs = new URLSearchParams(params).toString();
    return this.request("GET", `/api/runs${qs ? "?" + qs : ""}`);
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request("GET", `/api/runs/${runId}`);
  }

  startRun(configId: string, timeoutS = 600): Promise<{ run_id: string }> {
    return this.request("POST", "/api/runs", { config_id: configId, timeout_s: timeoutS });
  }

  cancelRun(runId: string): Promise<RunRecord> {
    return this.request("POST", `/api/runs/${runId}/cancel`);
  }

  getResources(runId: string): Promise<ResourcesPayload> {
    return this.request("GET", `/api/runs/${runId}/resources`);
  }

  startEvaluation(runId: string): Promise<{ eval_id: string }> {
    return this.request("POST", "/api/evaluations", { run_id: runId });
  }

  getEvaluation(evalId: string): Promise<EvalRecord> {
    return this.request("GET", `/api/evaluations/${evalId}`);
  }

  listEvaluations(runId?: string): Promise<{ items: EvalRecord[] }> {
    const qs = runId ? `?run_id=${encodeURIComponent(runId)}` : "";
    return this.request("GET", `/api/evaluations${qs}`);
  }

  getEvaluationSeries(evalId: string): Promise<Record<string, string>> {
    return this.request("GET", `/api/evaluations/${evalId}/series`);
  }

  getTrajectory(runId: string): Promise<string> {
    return this.requestText(`/api/runs/${runId}/trajectory`);
  }

  metaSeries(body: {
    x_axis: string;
    metric: string;
    filter?: { algorithm_id?: string | null; dataset_id?: string | null; mode?: string | null };
    unit?: string;
  }): Promise<MetaTable> {
    return this.request("POST", "/api/meta/series", body);
  }

  metaMatrix(body: { rows: [string, string][]; cols: string[] }): Promise<MetaMatrix> {
    return this.request("POST", "/api/meta/matrix", body);
  }
}
