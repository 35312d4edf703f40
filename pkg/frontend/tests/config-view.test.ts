import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ConfigFormView } from "../src/views/config";
import { algorithmFixture, datasetFixture, mockFetch } from "./mock";

function makeView(route = mockFetch(() => ({ body: {} }))) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const api = new ApiClient("", route);
  const view = new ConfigFormView(api, [algorithmFixture()] as never, [datasetFixture()] as never, root);
  return { view, root, route };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("ConfigFormView", () => {
  it("shows an inline violation and disables submit for out-of-range ints", () => {
    const { view, root } = makeView();
    view.setField("n_features", "99999");
    const violation = root.querySelector(".violation");
    expect(violation?.textContent).toMatch(/above maximum/);
    const button = root.querySelector("button:last-of-type") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    view.setField("n_features", "500");
    expect(root.querySelector(".violation")).toBeNull();
    expect(button.disabled).toBe(false);
  });

  it("grid mode with axes of sizes 3 and 2 previews 6 configurations", () => {
    const { view, root } = makeView();
    (root.querySelector("input[type=checkbox]") as HTMLInputElement).click();
    view.setGridAxis("n_features", "100, 200, 300");
    view.setGridAxis("noise_sigma_m", "0.0, 0.1");
    expect(root.querySelector(".preview")?.textContent).toBe("6 configurations");
  });

  it("copy-and-modify prefills, one change yields a new create call", async () => {
    const route = mockFetch((path, init) => {
      if (path === "/api/configs" && init?.method === "POST") {
        return { status: 201, body: { ...JSON.parse(String(init.body)), config_id: "new-id" } };
      }
      return null;
    });
    const { view, root } = makeView(route);
    view.prefill({
      config_id: "old-id",
      algorithm_id: "synthetic/v1",
      mode: "rgbd",
      dataset_id: "mh-01",
      algo_params: { n_features: 250, noise_sigma_m: 0.1 },
      dataset_params: {},
      remaps: [],
      repeat_index: 0,
    });
    view.setField("n_features", "500"); // the one modification
    await view.submit();
    const created = JSON.parse(String(route.calls[0].init?.body));
    expect(created.algo_params.n_features).toBe(500);
    expect(created.algo_params.noise_sigma_m).toBe(0.1); // untouched field carried over
    expect(created.mode).toBe("rgbd");
    expect(root.querySelector(".result")?.textContent).toBe("created config new-id");
  });

  it("renders server-side rejection in the result slot", async () => {
    const route = mockFetch(() => ({
      status: 422,
      body: { code: "validation_failure", message: "mode 'lidar_inertial' not supported", details: {} },
    }));
    const { view, root } = makeView(route);
    await view.submit();
    expect(root.querySelector(".result")?.textContent).toMatch(/validation_failure/);
  });
});
