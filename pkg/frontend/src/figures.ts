import { numericCell, requireColumns, Table, cell } from "./csv.js";

export const FIGURE_KINDS = ["accumulated_eta", "per_round", "accumulated_N"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface Curve {
  label: string;
  /** Bounds render as lines, measured trajectories as markers. */
  style: "line" | "markers";
  x: number[];
  y: number[];
}

export interface RenderOptions {
  logY?: boolean;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 170, top: 16, bottom: 46 };

interface SweepGroup {
  value: string;
  rows: string[][];
}

function groupBySweepValue(table: Table, sweepName: string): SweepGroup[] {
  const groups: SweepGroup[] = [];
  for (const row of table.rows) {
    if (cell(table, row, "sweep") !== sweepName) continue;
    const value = cell(table, row, "value");
    let group = groups.find((g) => g.value === value);
    if (!group) {
      group = { value, rows: [] };
      groups.push(group);
    }
    group.rows.push(row);
  }
  if (!groups.length) {
    throw new Error(`CSV holds no rows for sweep ${JSON.stringify(sweepName)}`);
  }
  return groups;
}

export function extractCurves(table: Table, kind: FigureKind): Curve[] {
  requireColumns(table, ["sweep", "value", "round"]);
  const curves: Curve[] = [];

  if (kind === "per_round") {
    requireColumns(table, ["eps_sq_mean"]);
    for (const g of groupBySweepValue(table, "eta")) {
      curves.push({
        label: `eta=${g.value}`,
        style: "markers",
        x: g.rows.map((r) => numericCell(table, r, "round")),
        y: g.rows.map((r) => numericCell(table, r, "eps_sq_mean")),
      });
    }
    return curves;
  }

  const sweepName = kind === "accumulated_eta" ? "eta" : "n_antennas";
  requireColumns(table, ["a_mean", "partial_bound"]);
  for (const g of groupBySweepValue(table, sweepName)) {
    const x = g.rows.map((r) => numericCell(table, r, "round"));
    curves.push({
      label: `${sweepName}=${g.value} actual`,
      style: "markers",
      x,
      y: g.rows.map((r) => numericCell(table, r, "a_mean")),
    });
    curves.push({
      label: `${sweepName}=${g.value} bound`,
      style: "line",
      x,
      y: g.rows.map((r) => numericCell(table, r, "partial_bound")),
    });
  }
  return curves;
}

function yAxisTitle(kind: FigureKind): string {
  return kind === "per_round" ? "per-round squared error" : "accumulated squared error";
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const raw = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = mag * (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10);
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(v);
  }
  return ticks;
}

function tickLabel(v: number, step: number): string {
  if (v === 0) return "0";
  const decimals = Math.max(0, -Math.floor(Math.log10(step)));
  if (decimals > 6 || Math.abs(v) >= 1e6) return v.toExponential(1);
  return v.toFixed(decimals);
}

function px(v: number): string {
  return v.toFixed(2);
}

export function renderSvg(curves: Curve[], kind: FigureKind, opts: RenderOptions = {}): string {
  const logY = opts.logY ?? false;
  const xs = curves.flatMap((c) => c.x);
  const ys = curves.flatMap((c) => c.y);
  if (logY && ys.some((v) => v <= 0)) {
    throw new Error("log-y requested but the data contains values <= 0");
  }

  const ty = logY ? Math.log10 : (v: number) => v;
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  let y0 = Math.min(...ys.map(ty));
  let y1 = Math.max(...ys.map(ty));
  const pad = (y1 - y0 || 1) * 0.05;
  y0 -= pad;
  y1 += pad;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0 || 1)) * plotW;
  const sy = (v: number) => MARGIN.top + plotH - ((ty(v) - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  // axes and ticks
  const axis: string[] = [`<g class="axes" stroke="#333" fill="none">`];
  const labels: string[] = [`<g class="axis-labels" fill="#333" stroke="none">`];
  axis.push(
    `<path d="M ${px(MARGIN.left)} ${px(MARGIN.top)} V ${px(MARGIN.top + plotH)} ` +
      `H ${px(MARGIN.left + plotW)}"/>`
  );
  const xTicks = niceTicks(x0, x1);
  const xStep = xTicks.length > 1 ? xTicks[1] - xTicks[0] : 1;
  for (const t of xTicks) {
    const X = sx(t);
    axis.push(`<line x1="${px(X)}" y1="${px(MARGIN.top + plotH)}" x2="${px(X)}" y2="${px(MARGIN.top + plotH + 5)}"/>`);
    labels.push(
      `<text x="${px(X)}" y="${px(MARGIN.top + plotH + 18)}" text-anchor="middle">${tickLabel(t, xStep)}</text>`
    );
  }
  const yTickVals = logY
    ? logTicks(y0, y1)
    : niceTicks(y0, y1);
  const yStep = yTickVals.length > 1 ? yTickVals[1] - yTickVals[0] : 1;
  for (const t of yTickVals) {
    const Y = MARGIN.top + plotH - ((t - y0) / (y1 - y0)) * plotH;
    axis.push(`<line x1="${px(MARGIN.left - 5)}" y1="${px(Y)}" x2="${px(MARGIN.left)}" y2="${px(Y)}"/>`);
    const text = logY ? `1e${Math.round(t)}` : tickLabel(t, yStep);
    labels.push(
      `<text x="${px(MARGIN.left - 8)}" y="${px(Y + 4)}" text-anchor="end">${text}</text>`
    );
  }
  labels.push(
    `<text x="${px(MARGIN.left + plotW / 2)}" y="${px(HEIGHT - 8)}" text-anchor="middle">round</text>`
  );
  labels.push(
    `<text x="14" y="${px(MARGIN.top + plotH / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 14 ${px(MARGIN.top + plotH / 2)})">${yAxisTitle(kind)}</text>`
  );
  axis.push("</g>");
  labels.push("</g>");
  parts.push(...axis, ...labels);

  // data
  curves.forEach((curve, idx) => {
    const color = PALETTE[Math.floor(idx / (kind === "per_round" ? 1 : 2)) % PALETTE.length];
    const pieces: string[] = [`<g class="curve" data-label="${curve.label}">`];
    if (curve.style === "line") {
      const pts = curve.x.map((v, i) => `${px(sx(v))},${px(sy(curve.y[i]))}`).join(" ");
      pieces.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    } else {
      for (let i = 0; i < curve.x.length; i++) {
        pieces.push(
          `<circle cx="${px(sx(curve.x[i]))}" cy="${px(sy(curve.y[i]))}" r="2.6" fill="${color}"/>`
        );
      }
    }
    pieces.push("</g>");
    parts.push(pieces.join(""));
  });

  // legend
  const legend: string[] = [`<g class="legend" font-size="12">`];
  curves.forEach((curve, idx) => {
    const color = PALETTE[Math.floor(idx / (kind === "per_round" ? 1 : 2)) % PALETTE.length];
    const y = MARGIN.top + 10 + idx * 18;
    const x = WIDTH - MARGIN.right + 14;
    if (curve.style === "line") {
      legend.push(`<line x1="${x}" y1="${y}" x2="${x + 20}" y2="${y}" stroke="${color}" stroke-width="1.8"/>`);
    } else {
      legend.push(`<circle cx="${x + 10}" cy="${y}" r="2.6" fill="${color}"/>`);
    }
    legend.push(`<text x="${x + 26}" y="${y + 4}" fill="#333">${curve.label}</text>`);
  });
  legend.push("</g>");
  parts.push(legend.join(""));

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) ticks.push(e);
  if (!ticks.length) ticks.push((lo + hi) / 2);
  return ticks;
}

export function renderFigure(table: Table, kind: FigureKind, opts: RenderOptions = {}): string {
  return renderSvg(extractCurves(table, kind), kind, opts);
}
