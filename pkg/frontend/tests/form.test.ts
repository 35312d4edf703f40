import { describe, expect, it } from "vitest";

import { countCombinations, fieldsFromSpecs, parseAxis, parseValue, validateField, validateForm } from "../src/form";
import type { ParamSpec } from "../src/types";

const intSpec: ParamSpec = { name: "n_features", kind: "int", default: 1000, minimum: 1, maximum: 5000, choices: null };
const floatSpec: ParamSpec = { name: "sigma", kind: "float", default: 0.0, minimum: 0.0, maximum: null, choices: null };
const enumSpec: ParamSpec = { name: "mode", kind: "enum", default: "a", minimum: null, maximum: null, choices: ["a", "b"] };

describe("parseValue", () => {
  it("parses ints strictly", () => {
    expect(parseValue(intSpec, "250")).toBe(250);
    expect(parseValue(intSpec, "2.5")).toBeNull();
    expect(parseValue(intSpec, "abc")).toBeNull();
  });

  it("parses floats and bools", () => {
    expect(parseValue(floatSpec, "0.05")).toBeCloseTo(0.05);
    expect(parseValue({ ...floatSpec, kind: "bool" }, "true")).toBe(true);
    expect(parseValue({ ...floatSpec, kind: "bool" }, "yes")).toBeNull();
  });
});

describe("validateField", () => {
  it("flags out-of-range ints", () => {
    expect(validateField(intSpec, "0")).toMatch(/below minimum/);
    expect(validateField(intSpec, "9999")).toMatch(/above maximum/);
    expect(validateField(intSpec, "500")).toBeNull();
  });

  it("flags values outside an enum", () => {
    expect(validateField(enumSpec, "c")).toMatch(/not one of/);
    expect(validateField(enumSpec, "b")).toBeNull();
  });
});

describe("validateForm", () => {
  it("collects typed values and blocks submit on any violation", () => {
    const fields = fieldsFromSpecs([intSpec, floatSpec]);
    fields[0].raw = "250";
    fields[1].raw = "-1";
    const v = validateForm(fields);
    expect(v.submittable).toBe(false);
    expect(v.violations["sigma"]).toMatch(/below minimum/);
    fields[1].raw = "0.05";
    const ok = validateForm(fields);
    expect(ok.submittable).toBe(true);
    expect(ok.values).toEqual({ n_features: 250, sigma: 0.05 });
  });
});

describe("grid preview", () => {
  it("axis sizes 3 and 2 preview 6 configurations", () => {
    const a = parseAxis(intSpec, "100, 200, 300");
    const b = parseAxis(floatSpec, "0.0, 0.1");
    expect(a).not.toBeNull();
    expect(b).not.toBeNull();
    expect(countCombinations([a!, b!], 1)).toBe(6);
  });

  it("matches the reference sweep size with repeats", () => {
    const axes = [10, 5, 10, 4, 4].map((size, i) =>
      parseAxis({ ...intSpec, name: `p${i}`, minimum: null, maximum: null }, Array.from({ length: size }, (_, k) => String(k)).join(",")),
    );
    expect(countCombinations(axes.map((a) => a!), 10)).toBe(80000);
  });

  it("rejects axes containing out-of-domain values", () => {
    expect(parseAxis(intSpec, "100, 9999")).toBeNull();
    expect(parseAxis(intSpec, "")).toBeNull();
  });
});
