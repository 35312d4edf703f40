// ParamSpec-driven form model: field generation, client-side validation that
// mirrors the server's parameter domains, and grid-size preview arithmetic.

import type { ParamSpec } from "./types.js";

export interface FormField {
  spec: ParamSpec;
  raw: string; // what's in the input box
}

export function fieldsFromSpecs(specs: ParamSpec[]): FormField[] {
  return specs.map((spec) => ({ spec, raw: formatDefault(spec) }));
}

export function formatDefault(spec: ParamSpec): string {
  if (spec.default === null || spec.default === undefined) return "";
  return String(spec.default);
}

/** Parse the raw input into a typed value, or return null when unparseable. */
export function parseValue(spec: ParamSpec, raw: string): unknown | null {
  const text = raw.trim();
  switch (spec.kind) {
    case "int": {
      if (!/^[+-]?\d+$/.test(text)) return null;
      return parseInt(text, 10);
    }
    case "float": {
      const v = Number(text);
      return text === "" || Number.isNaN(v) ? null : v;
    }
    case "bool": {
      if (text === "true") return true;
      if (text === "false") return false;
      return null;
    }
    case "enum":
    case "string":
      return text;
  }
}

/** Mirror of the server-side domain check; returns a violation string or null. */
export function validateField(spec: ParamSpec, raw: string): string | null {
  const value = parseValue(spec, raw);
  if (value === null) return `${spec.name}: expected ${spec.kind}`;
  if (spec.kind === "int" || spec.kind === "float") {
    const v = value as number;
    if (spec.minimum !== null && v < spec.minimum) return `${spec.name}: ${v} below minimum ${spec.minimum}`;
    if (spec.maximum !== null && v > spec.maximum) return `${spec.name}: ${v} above maximum ${spec.maximum}`;
  }
  if (spec.choices && !spec.choices.map(String).includes(String(value))) {
    return `${spec.name}: not one of ${spec.choices.join(", ")}`;
  }
  return null;
}

export interface FormValidation {
  values: Record<string, unknown>;
  violations: Record<string, string>;
  submittable: boolean;
}

export function validateForm(fields: FormField[]): FormValidation {
  const values: Record<string, unknown> = {};
  const violations: Record<string, string> = {};
  for (const f of fields) {
    const violation = validateField(f.spec, f.raw);
    if (violation) {
      violations[f.spec.name] = violation;
    } else {
      values[f.spec.name] = parseValue(f.spec, f.raw);
    }
  }
  return { values, violations, submittable: Object.keys(violations).length === 0 };
}

export interface GridAxis {
  name: string;
  values: unknown[];
}

/** Parse "1, 2, 3" style axis input against the parameter's kind. */
export function parseAxis(spec: ParamSpec, raw: string): GridAxis | null {
  const parts = raw
    .split(",")
    .map((p) => p.trim())
    .filter((p) => p.length > 0);
  if (parts.length === 0) return null;
  const values: unknown[] = [];
  for (const part of parts) {
    const v = parseValue(spec, part);
    if (v === null || validateField(spec, part) !== null) return null;
    values.push(v);
  }
  return { name: spec.name, values };
}

/** Preview count: product of axis sizes times repeats — must equal the server's. */
export function countCombinations(axes: GridAxis[], repeats: number): number {
  let n = Math.max(1, repeats);
  for (const axis of axes) n *= axis.values.length;
  return n;
}
