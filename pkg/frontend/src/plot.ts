import { Cell, PlotSpec, TablePayload } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 480;
const HEIGHT = 260;
const MARGIN = { top: 28, right: 12, bottom: 36, left: 48 };
const HIST_BINS = 10;

interface XY {
  label: string;
  x: number;
  y: number;
}

function placeholder(kind: string, message: string, spec?: PlotSpec): HTMLElement {
  const card = document.createElement("div");
  card.className = `plot-placeholder ${kind}`;
  const note = document.createElement("p");
  note.textContent = message;
  card.appendChild(note);
  if (spec) {
    const raw = document.createElement("pre");
    raw.className = "plot-raw-spec";
    raw.textContent = JSON.stringify(spec);
    card.appendChild(raw);
  }
  return card;
}

function svgRoot(title: string): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "plot");
  const caption = document.createElementNS(SVG_NS, "text");
  caption.setAttribute("x", String(WIDTH / 2));
  caption.setAttribute("y", "18");
  caption.setAttribute("text-anchor", "middle");
  caption.setAttribute("class", "plot-title");
  caption.textContent = title;
  svg.appendChild(caption);
  return svg;
}

function axisLabels(svg: SVGSVGElement, xLabel: string, yLabel: string): void {
  const x = document.createElementNS(SVG_NS, "text");
  x.setAttribute("x", String(WIDTH / 2));
  x.setAttribute("y", String(HEIGHT - 6));
  x.setAttribute("text-anchor", "middle");
  x.setAttribute("class", "axis-label-x");
  x.textContent = xLabel;
  svg.appendChild(x);

  const y = document.createElementNS(SVG_NS, "text");
  y.setAttribute("transform", `translate(12 ${HEIGHT / 2}) rotate(-90)`);
  y.setAttribute("text-anchor", "middle");
  y.setAttribute("class", "axis-label-y");
  y.textContent = yLabel;
  svg.appendChild(y);
}

function asNumber(v: Cell): number | null {
  if (typeof v === "number") {
    return Number.isFinite(v) ? v : null;
  }
  if (typeof v === "boolean") {
    return v ? 1 : 0;
  }
  return null;
}

function columnIndex(table: TablePayload, name: string): number {
  return table.columns.indexOf(name);
}

function scale(value: number, lo: number, hi: number, outLo: number, outHi: number): number {
  if (hi === lo) {
    return (outLo + outHi) / 2;
  }
  return outLo + ((value - lo) / (hi - lo)) * (outHi - outLo);
}

function extent(values: number[]): [number, number] {
  return [Math.min(...values), Math.max(...values)];
}

function gatherXY(spec: PlotSpec, table: TablePayload): XY[] {
  const xi = columnIndex(table, spec.x);
  const yi = spec.y === null ? -1 : columnIndex(table, spec.y);
  const points: XY[] = [];
  table.cells.forEach((row, i) => {
    const rawX = xi >= 0 ? row[xi] ?? null : null;
    const y = yi >= 0 ? asNumber(row[yi] ?? null) : 1;
    if (y === null) {
      return;
    }
    const xNum = asNumber(rawX);
    points.push({
      label: rawX === null ? "∅" : String(rawX),
      x: xNum === null ? i : xNum,
      y,
    });
  });
  return points;
}

function drawBars(svg: SVGSVGElement, points: XY[]): void {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const [, maxY] = extent(points.map((p) => p.y));
  const top = Math.max(maxY, 0);
  const slot = innerW / points.length;
  points.forEach((p, i) => {
    const h = top <= 0 ? 0 : Math.max(0, (p.y / top) * innerH);
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", "bar");
    rect.setAttribute("x", String(MARGIN.left + i * slot + slot * 0.1));
    rect.setAttribute("y", String(MARGIN.top + innerH - h));
    rect.setAttribute("width", String(slot * 0.8));
    rect.setAttribute("height", String(h));
    const label = document.createElementNS(SVG_NS, "title");
    label.textContent = `${p.label}: ${p.y}`;
    rect.appendChild(label);
    svg.appendChild(rect);

    const tick = document.createElementNS(SVG_NS, "text");
    tick.setAttribute("class", "bar-label");
    tick.setAttribute("x", String(MARGIN.left + i * slot + slot / 2));
    tick.setAttribute("y", String(HEIGHT - MARGIN.bottom + 14));
    tick.setAttribute("text-anchor", "middle");
    tick.textContent = p.label;
    svg.appendChild(tick);
  });
}

function drawLine(svg: SVGSVGElement, points: XY[]): void {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const [loX, hiX] = extent(points.map((p) => p.x));
  const [loY, hiY] = extent(points.map((p) => p.y));
  const coords = points
    .map((p) => {
      const px = scale(p.x, loX, hiX, MARGIN.left, MARGIN.left + innerW);
      const py = scale(p.y, loY, hiY, MARGIN.top + innerH, MARGIN.top);
      return `${px},${py}`;
    })
    .join(" ");
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", "line");
  line.setAttribute("fill", "none");
  line.setAttribute("points", coords);
  svg.appendChild(line);
}

function drawScatter(svg: SVGSVGElement, points: XY[]): void {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const [loX, hiX] = extent(points.map((p) => p.x));
  const [loY, hiY] = extent(points.map((p) => p.y));
  for (const p of points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", "dot");
    dot.setAttribute("cx", String(scale(p.x, loX, hiX, MARGIN.left, MARGIN.left + innerW)));
    dot.setAttribute("cy", String(scale(p.y, loY, hiY, MARGIN.top + innerH, MARGIN.top)));
    dot.setAttribute("r", "4");
    svg.appendChild(dot);
  }
}

function drawHist(svg: SVGSVGElement, spec: PlotSpec, table: TablePayload): boolean {
  const xi = columnIndex(table, spec.x);
  if (xi < 0) {
    return false;
  }
  const values: number[] = [];
  for (const row of table.cells) {
    const v = asNumber(row[xi] ?? null);
    if (v !== null) {
      values.push(v);
    }
  }
  if (values.length === 0) {
    return false;
  }
  const [lo, hi] = extent(values);
  const span = hi - lo || 1;
  const counts = new Array<number>(HIST_BINS).fill(0);
  for (const v of values) {
    const bin = Math.min(HIST_BINS - 1, Math.floor(((v - lo) / span) * HIST_BINS));
    counts[bin] = (counts[bin] ?? 0) + 1;
  }
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const maxCount = Math.max(...counts);
  const slot = innerW / HIST_BINS;
  counts.forEach((count, i) => {
    const h = (count / maxCount) * innerH;
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", "hist-bin");
    rect.setAttribute("x", String(MARGIN.left + i * slot));
    rect.setAttribute("y", String(MARGIN.top + innerH - h));
    rect.setAttribute("width", String(slot * 0.95));
    rect.setAttribute("height", String(h));
    svg.appendChild(rect);
  });
  return true;
}

/**
 * Turn a plot request plus the rows it ran on into a chart element.
 * Unknown kinds and impossible specs degrade to labeled placeholders so a
 * newer server never breaks an older client.
 */
export function renderPlot(spec: PlotSpec, table: TablePayload): HTMLElement | SVGSVGElement {
  if (spec.kind === "hist" && spec.y !== null) {
    return placeholder("plot-invalid", "invalid plot request: hist takes no y column", spec);
  }
  if (!["bar", "line", "scatter", "hist"].includes(spec.kind)) {
    return placeholder("plot-unknown", `unsupported plot kind "${spec.kind}"`, spec);
  }
  if (table.cells.length === 0) {
    return placeholder("plot-empty", "nothing to plot: the result has no rows");
  }

  const svg = svgRoot(spec.title);
  if (spec.kind === "hist") {
    if (!drawHist(svg, spec, table)) {
      return placeholder("plot-empty", "nothing to plot: no numeric values", spec);
    }
    axisLabels(svg, spec.x, "count");
    return svg;
  }

  const points = gatherXY(spec, table);
  if (points.length === 0) {
    return placeholder("plot-empty", "nothing to plot: no usable points", spec);
  }
  if (spec.kind === "bar") {
    drawBars(svg, points);
  } else if (spec.kind === "line") {
    drawLine(svg, points);
  } else {
    drawScatter(svg, points);
  }
  axisLabels(svg, spec.x, spec.y ?? "value");
  return svg;
}
