#!/usr/bin/env node
/**
 * Batch renderer CLI:
 *   render --kind {convergence|decay|error-history} --in <csv...> --out <file>
 *
 * Exit codes: 0 success, 2 usage/schema error, 3 empty or missing data.
 * On any failure no output file is written.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { SchemaError } from "./csv.js";
import { EmptyFigureError, renderFromTexts } from "./render.js";
import { FigureKind } from "./series.js";

const KINDS: FigureKind[] = ["convergence", "decay", "error-history"];
const USAGE =
  "usage: ncdg-plots render --kind {convergence|decay|error-history} --in <csv...> --out <file>";

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    console.error(USAGE);
    return 2;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(`${(err as Error).message}\n${USAGE}`);
    return 2;
  }
  const kind = parsed.values.kind as FigureKind | undefined;
  // shell globs after --in arrive as positionals
  const inputs = [...(parsed.values.in ?? []), ...parsed.positionals];
  const out = parsed.values.out;
  if (!kind || !KINDS.includes(kind) || inputs.length === 0 || !out) {
    console.error(USAGE);
    return 2;
  }

  let texts: Array<{ name: string; text: string }>;
  try {
    texts = inputs.map((name) => ({ name, text: readFileSync(name, "utf8") }));
  } catch (err) {
    console.error(`cannot read input: ${(err as Error).message}`);
    return 3;
  }

  try {
    const { svg, seriesCount } = renderFromTexts(kind, texts);
    writeFileSync(out, svg);
    console.log(`wrote ${out}: ${seriesCount} series`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    if (err instanceof EmptyFigureError) {
      console.error(err.message);
      return 3;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
