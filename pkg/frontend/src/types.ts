// Direct projections of the service's JSON payloads. No client-only derived
// state is persisted; every rendered number must be traceable to one of these
// fields.

export interface ParamSpec {
  name: string;
  kind: "int" | "float" | "string" | "bool" | "enum";
  default: unknown;
  minimum: number | null;
  maximum: number | null;
  choices: unknown[] | null;
}

export interface Algorithm {
  id: string;
  name: string;
  version_tag: string;
  image_ref: string;
  modes: string[];
  entry_script: string;
  params: ParamSpec[];
}

export interface Dataset {
  id: string;
  name: string;
  sequence_name: string;
  data_path: string;
  groundtruth_path: string;
  topics: string[];
  params: ParamSpec[];
  length_m: number | null;
  duration_s: number | null;
}

export interface MappingConfig {
  config_id: string;
  algorithm_id: string;
  mode: string;
  dataset_id: string;
  algo_params: Record<string, unknown>;
  dataset_params: Record<string, unknown>;
  remaps: { from_topic: string; to_topic: string }[];
  repeat_index: number;
}

export type RunState = "Pending" | "Running" | "Succeeded" | "Failed" | "TimedOut" | "Cancelled";

export const TERMINAL_STATES: RunState[] = ["Succeeded", "Failed", "TimedOut", "Cancelled"];

export interface RunRecord {
  run_id: string;
  config_id: string;
  state: RunState;
  created_at: number;
  exit_code: number | null;
  started_at: number | null;
  finished_at: number | null;
  failure_reason: string | null;
  trajectory_ref: string | null;
  wall_time_s?: number | null;
  transitions?: { from_state: string | null; to_state: string; at: number }[];
}

export interface ResourceSample {
  t: number;
  cpu_cores: number;
  rss_mb: number;
}

export interface ResourcesPayload {
  run_id: string;
  samples: ResourceSample[];
  live: boolean;
  cpu_avg_cores?: number;
  cpu_max_cores?: number;
  ram_max_mb?: number;
}

export interface StatsSummary {
  min: number;
  max: number;
  mean: number;
  std: number;
  rmse: number;
  count: number;
}

export interface EvalRecord {
  eval_id: string;
  run_id: string;
  status: "pending" | "done" | "failed";
  error?: string | null;
  ate_stats?: StatsSummary;
  rpe_stats?: StatsSummary;
  pairs_used?: number;
  series_refs?: Record<string, string>;
}

// one JSON object per line of the eval "plots" series blob
export interface PlotRecord {
  kind: "xy" | "error";
  series: string;
  t: number;
  x?: number;
  y?: number;
  value?: number;
}

export interface MetaRow {
  x: number | string;
  value: number | null;
  spread: number | null;
  n: number;
  failed_count: number;
  all_failed: boolean;
}

export interface MetaTable {
  rows: MetaRow[];
  metric: string;
  unit: string;
}

export interface MatrixCell {
  ate_rmse: number | null;
  cpu_avg: number | null;
  cpu_max: number | null;
  ram_max: number | null;
  cpu_display: string;
  n: number;
  spread: number | null;
  best_rmse: boolean;
  best_cpu: boolean;
  best_ram: boolean;
  empty: boolean;
}

export interface MetaMatrix {
  rows: [string, string][]; // [algorithm_id, mode]
  cols: string[]; // dataset ids
  cells: MatrixCell[][];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: unknown;
}
