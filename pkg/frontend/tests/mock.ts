// Scripted fetch stub: routes the paths the views hit to canned JSON payloads
// that mirror the documented API shapes. Used instead of a live service.

import type { FetchLike } from "../src/api";

export type Route = (path: string, init?: RequestInit) => { status?: number; body?: unknown; text?: string } | null;

export function mockFetch(route: Route): FetchLike & { calls: { path: string; init?: RequestInit }[] } {
  const calls: { path: string; init?: RequestInit }[] = [];
  const impl = async (path: string, init?: RequestInit): Promise<Response> => {
    calls.push({ path, init });
    const out = route(path, init);
    if (out === null) {
      return new Response(JSON.stringify({ code: "not_found", message: `no route for ${path}`, details: {} }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    const status = out.status ?? 200;
    if (out.text !== undefined) {
      return new Response(out.text, { status, headers: { "content-type": "text/plain" } });
    }
    return new Response(JSON.stringify(out.body ?? null), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return Object.assign(impl, { calls });
}

export function algorithmFixture() {
  return {
    id: "synthetic/v1",
    name: "synthetic",
    version_tag: "v1",
    image_ref: "bench/synthetic",
    modes: ["monocular", "rgbd"],
    entry_script: "/opt/run.py",
    params: [
      { name: "noise_sigma_m", kind: "float", default: 0.0, minimum: 0.0, maximum: 10.0, choices: null },
      { name: "n_features", kind: "int", default: 1000, minimum: 1, maximum: 5000, choices: null },
      {
        name: "fail_mode",
        kind: "enum",
        default: "none",
        minimum: null,
        maximum: null,
        choices: ["none", "empty_output"],
      },
    ],
  };
}

export function datasetFixture() {
  return {
    id: "mh-01",
    name: "mh-01",
    sequence_name: "MH_01",
    data_path: "/data/mh-01",
    groundtruth_path: "/data/mh-01/groundtruth.tum",
    topics: ["/cam0"],
    params: [],
    length_m: 80.6,
    duration_s: 182.0,
  };
}
