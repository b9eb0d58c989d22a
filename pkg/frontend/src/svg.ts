/**
 * Minimal deterministic SVG figure renderer: fixed theme, no timestamps, no
 * randomness, so identical input yields byte-identical output.
 */

import { FigureSpec } from "./series.js";

const WIDTH = 840;
const HEIGHT = 560;
const MARGIN = { left: 80, right: 220, top: 40, bottom: 60 };

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
  "#393b79", "#ad494a", "#637939", "#7b4173", "#e6550d",
];
const DASHES = ["", "6,3", "2,2"];

class Scale {
  constructor(
    private lo: number,
    private hi: number,
    private outLo: number,
    private outHi: number,
    private log: boolean,
  ) {}

  map(v: number): number {
    const a = this.log ? Math.log10(this.lo) : this.lo;
    const b = this.log ? Math.log10(this.hi) : this.hi;
    const x = this.log ? Math.log10(v) : v;
    const t = b === a ? 0.5 : (x - a) / (b - a);
    return this.outLo + t * (this.outHi - this.outLo);
  }

  ticks(): number[] {
    if (this.log) {
      const lo = Math.floor(Math.log10(this.lo));
      const hi = Math.ceil(Math.log10(this.hi));
      const step = Math.max(1, Math.ceil((hi - lo) / 8));
      const out: number[] = [];
      for (let e = lo; e <= hi; e += step) out.push(10 ** e);
      return out;
    }
    const span = this.hi - this.lo;
    if (span <= 0) return [this.lo];
    const raw = span / 6;
    const mag = 10 ** Math.floor(Math.log10(raw));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 7) ?? mag * 10;
    const start = Math.ceil(this.lo / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.hi + 1e-12 * Math.abs(step); v += step) out.push(v);
    return out;
  }
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 0.01 && abs < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(0).replace("+", "");
}

function extent(values: number[], log: boolean): [number, number] {
  const usable = log ? values.filter((v) => v > 0) : values;
  if (usable.length === 0) return log ? [1e-16, 1] : [0, 1];
  let lo = Math.min(...usable);
  let hi = Math.max(...usable);
  if (lo === hi) {
    lo = log ? lo / 10 : lo - 1;
    hi = log ? hi * 10 : hi + 1;
  }
  return [lo, hi];
}

export function renderSvg(spec: FigureSpec, title: string): string {
  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p.y));
  const [xLo, xHi] = extent(xs, spec.logX);
  const [yLo, yHi] = extent(ys, spec.logY);
  const sx = new Scale(xLo, xHi, MARGIN.left, WIDTH - MARGIN.right, spec.logX);
  const sy = new Scale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top, spec.logY);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="24" text-anchor="middle" font-size="16">${title}</text>`,
  );

  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);

  for (const t of sx.ticks()) {
    if (t < xLo * 0.999 || t > xHi * 1.001) continue;
    const px = sx.map(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${px.toFixed(2)}" y="${y0 + 20}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of sy.ticks()) {
    const py = sy.map(t);
    if (py > y0 || py < y1) continue;
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 9}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 16}" text-anchor="middle" font-size="13">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="22" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 22 ${(y0 + y1) / 2})">${spec.yLabel}</text>`,
  );

  spec.series.forEach((series, k) => {
    const color = PALETTE[k % PALETTE.length];
    const dash = DASHES[Math.floor(k / PALETTE.length) % DASHES.length];
    const pts = series.points
      .filter((p) => (!spec.logX || p.x > 0) && (!spec.logY || p.y > 0))
      .map((p) => `${sx.map(p.x).toFixed(2)},${sy.map(p.y).toFixed(2)}`)
      .join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.6"${dashAttr} points="${pts}" data-series="${series.label}"/>`,
    );
    for (const p of series.points) {
      if ((spec.logX && p.x <= 0) || (spec.logY && p.y <= 0)) continue;
      parts.push(
        `<circle cx="${sx.map(p.x).toFixed(2)}" cy="${sy.map(p.y).toFixed(2)}" r="2.4" fill="${color}"/>`,
      );
    }
    const ly = MARGIN.top + 16 * k;
    parts.push(
      `<line x1="${x1 + 14}" y1="${ly}" x2="${x1 + 38}" y2="${ly}" stroke="${color}" stroke-width="1.6"${dashAttr}/>`,
    );
    parts.push(
      `<text x="${x1 + 44}" y="${ly + 4}" font-size="11" class="legend-label">${series.label}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
