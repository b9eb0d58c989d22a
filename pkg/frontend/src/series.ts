/** Grouping of harness rows into plottable series per figure kind. */

import { Row, meshWidth } from "./csv.js";

export type FigureKind = "convergence" | "decay" | "error-history";

export interface Series {
  label: string;
  points: Array<{ x: number; y: number }>;
}

export interface FigureSpec {
  kind: FigureKind;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  series: Series[];
}

const KIND_METRIC: Record<FigureKind, string> = {
  convergence: "l2_error",
  decay: "linf_peak",
  "error-history": "l2_rho_error",
};

function seriesKey(row: Row): string {
  return `${row.method} P${row.p}Q${row.q}`;
}

export function buildFigure(kind: FigureKind, rows: Row[]): FigureSpec {
  const metric = KIND_METRIC[kind];
  const groups = new Map<string, Array<{ x: number; y: number }>>();
  for (const row of rows) {
    if (row.metricName !== metric) continue;
    const x =
      kind === "convergence"
        ? 1.0 / meshWidth(row.mesh)
        : kind === "decay"
          ? row.sampleIndex
          : row.time;
    const key = seriesKey(row);
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push({ x, y: row.metricValue });
  }
  const series: Series[] = [...groups.entries()]
    .map(([label, points]) => ({
      label,
      points: points.slice().sort((a, b) => a.x - b.x),
    }))
    .sort((a, b) => (a.label < b.label ? -1 : 1));
  return {
    kind,
    xLabel: kind === "convergence" ? "h" : kind === "decay" ? "cycle" : "time",
    yLabel: metric,
    logX: kind === "convergence",
    logY: kind !== "decay",
    series,
  };
}
