/** End-to-end figure assembly from CSV text inputs. */

import { parseCsv, Row } from "./csv.js";
import { buildFigure, FigureKind } from "./series.js";
import { renderSvg } from "./svg.js";

export class EmptyFigureError extends Error {}

const TITLES: Record<FigureKind, string> = {
  convergence: "L2 error vs h",
  decay: "Peak value vs cycle",
  "error-history": "L2 density error history",
};

export function renderFromTexts(
  kind: FigureKind,
  inputs: Array<{ name: string; text: string }>,
): { svg: string; seriesCount: number } {
  const rows: Row[] = [];
  for (const input of inputs) {
    rows.push(...parseCsv(input.text, input.name));
  }
  const figure = buildFigure(kind, rows);
  if (figure.series.length === 0) {
    throw new EmptyFigureError(
      `no '${kind}' series found in ${inputs.length} input file(s)`);
  }
  return {
    svg: renderSvg(figure, TITLES[kind]),
    seriesCount: figure.series.length,
  };
}
