// Hand-rolled SVG charts: time series (CPU/RAM), xy trajectory overlay, and
// errorbar series. No chart library; each chart is a pure function from data
// to an <svg> element so tests can inspect the output directly.

const SVG_NS = "http://www.w3.org/2000/svg";

export interface XY {
  x: number;
  y: number;
}

export interface Series {
  name: string;
  points: XY[];
  color: string;
}

interface Extent {
  min: number;
  max: number;
}

function extent(values: number[]): Extent {
  if (values.length === 0) return { min: 0, max: 1 };
  let min = values[0];
  let max = values[0];
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  return { min, max };
}

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export interface ChartOptions {
  width?: number;
  height?: number;
  xLabel?: string;
  yLabel?: string;
}

/** Polyline chart; one <polyline data-series=name> per series. */
export function lineChart(series: Series[], opts: ChartOptions = {}): SVGElement {
  const width = opts.width ?? 560;
  const height = opts.height ?? 220;
  const pad = 36;
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const ex = extent(xs);
  const ey = extent(ys);
  const sx = (x: number) => pad + ((x - ex.min) / (ex.max - ex.min)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - ey.min) / (ey.max - ey.min)) * (height - 2 * pad);

  const svg = el("svg", { width: String(width), height: String(height), viewBox: `0 0 ${width} ${height}` });
  svg.appendChild(el("line", { x1: String(pad), y1: String(height - pad), x2: String(width - pad), y2: String(height - pad), stroke: "#888" }));
  svg.appendChild(el("line", { x1: String(pad), y1: String(pad), x2: String(pad), y2: String(height - pad), stroke: "#888" }));
  for (const s of series) {
    const pts = s.points.map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`).join(" ");
    const line = el("polyline", {
      points: pts,
      fill: "none",
      stroke: s.color,
      "stroke-width": "1.5",
      "data-series": s.name,
      "data-count": String(s.points.length),
    });
    svg.appendChild(line);
  }
  if (opts.yLabel) {
    const label = el("text", { x: "4", y: "14", "font-size": "11", fill: "#444" });
    label.textContent = opts.yLabel;
    svg.appendChild(label);
  }
  return svg;
}

export interface ErrorBarPoint {
  x: number;
  mean: number | null;
  std: number | null;
  failed: boolean;
}

/** Series-with-errorbars chart; failed groups render an x-axis marker instead of a point. */
export function errorBarChart(points: ErrorBarPoint[], opts: ChartOptions = {}): SVGElement {
  const width = opts.width ?? 560;
  const height = opts.height ?? 220;
  const pad = 36;
  const xs = points.map((p) => p.x);
  const ys = points.filter((p) => p.mean !== null).map((p) => (p.mean as number) + (p.std ?? 0));
  const ex = extent(xs);
  const ey = extent(ys.length ? ys.concat([0]) : [0, 1]);
  const sx = (x: number) => pad + ((x - ex.min) / (ex.max - ex.min)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - ey.min) / (ey.max - ey.min)) * (height - 2 * pad);

  const svg = el("svg", { width: String(width), height: String(height), viewBox: `0 0 ${width} ${height}` });
  svg.appendChild(el("line", { x1: String(pad), y1: String(height - pad), x2: String(width - pad), y2: String(height - pad), stroke: "#888" }));
  for (const p of points) {
    if (p.failed || p.mean === null) {
      const marker = el("text", {
        x: String(sx(p.x)),
        y: String(height - pad + 14),
        "font-size": "12",
        "text-anchor": "middle",
        fill: "#c0392b",
        "data-failed-x": String(p.x),
      });
      marker.textContent = "✗";
      svg.appendChild(marker);
      continue;
    }
    const cx = sx(p.x);
    const cy = sy(p.mean);
    if (p.std !== null && p.std > 0) {
      svg.appendChild(
        el("line", {
          x1: String(cx),
          y1: String(sy(p.mean - p.std)),
          x2: String(cx),
          y2: String(sy(p.mean + p.std)),
          stroke: "#2980b9",
          "data-errorbar-x": String(p.x),
        }),
      );
    }
    svg.appendChild(
      el("circle", { cx: String(cx), cy: String(cy), r: "3", fill: "#2980b9", "data-point-x": String(p.x) }),
    );
  }
  return svg;
}
