import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { mockFetch } from "./mock";

describe("ApiClient", () => {
  it("parses success payloads", async () => {
    const fetchImpl = mockFetch((path) =>
      path === "/api/runs/abc" ? { body: { run_id: "abc", state: "Running" } } : null,
    );
    const api = new ApiClient("", fetchImpl);
    const run = await api.getRun("abc");
    expect(run.state).toBe("Running");
  });

  it("maps ApiError bodies to typed errors", async () => {
    const fetchImpl = mockFetch(() => ({
      status: 409,
      body: { code: "already_terminal", message: "run x is already Succeeded", details: {} },
    }));
    const api = new ApiClient("", fetchImpl);
    const err = await api.cancelRun("x").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("already_terminal");
    expect(err.message).toMatch(/already Succeeded/);
  });

  it("sends JSON bodies with the right content type", async () => {
    const fetchImpl = mockFetch(() => ({ status: 202, body: { run_id: "r1" } }));
    const api = new ApiClient("", fetchImpl);
    await api.startRun("cfg-1", 60);
    const call = fetchImpl.calls[0];
    expect(call.path).toBe("/api/runs");
    expect(JSON.parse(String(call.init?.body))).toEqual({ config_id: "cfg-1", timeout_s: 60 });
  });
});
