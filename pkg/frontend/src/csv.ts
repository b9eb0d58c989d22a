/**
 * Reader for the benchmark harness CSV schema.
 *
 * Columns are fixed: case, method, P, Q, mesh, sample_index, time,
 * metric_name, metric_value.  Any deviation is reported with a column
 * diagnostic so a schema drift fails loudly instead of plotting nonsense.
 */

export const EXPECTED_COLUMNS = [
  "case",
  "method",
  "P",
  "Q",
  "mesh",
  "sample_index",
  "time",
  "metric_name",
  "metric_value",
] as const;

export interface Row {
  case: string;
  method: string;
  p: number;
  q: number;
  mesh: string;
  sampleIndex: number;
  time: number;
  metricName: string;
  metricValue: number;
}

export class SchemaError extends Error {}

export function parseCsv(text: string, source = "<csv>"): Row[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file (no header)`);
  }
  const header = lines[0].split(",");
  const expected = EXPECTED_COLUMNS.join(",");
  if (header.join(",") !== expected) {
    const diffs: string[] = [];
    for (let i = 0; i < Math.max(header.length, EXPECTED_COLUMNS.length); i++) {
      const got = header[i] ?? "<missing>";
      const want = EXPECTED_COLUMNS[i] ?? "<extra>";
      if (got !== want) diffs.push(`column ${i}: expected '${want}', got '${got}'`);
    }
    throw new SchemaError(
      `${source}: header mismatch\n  expected: ${expected}\n  got:      ${lines[0]}\n  ${diffs.join("\n  ")}`,
    );
  }
  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== EXPECTED_COLUMNS.length) {
      throw new SchemaError(
        `${source}:${i + 1}: expected ${EXPECTED_COLUMNS.length} fields, got ${parts.length}`,
      );
    }
    const numeric = (field: string, value: string): number => {
      const parsed = Number(value);
      if (!Number.isFinite(parsed)) {
        throw new SchemaError(`${source}:${i + 1}: non-numeric ${field} '${value}'`);
      }
      return parsed;
    };
    rows.push({
      case: parts[0],
      method: parts[1],
      p: numeric("P", parts[2]),
      q: numeric("Q", parts[3]),
      mesh: parts[4],
      sampleIndex: numeric("sample_index", parts[5]),
      time: numeric("time", parts[6]),
      metricName: parts[7],
      metricValue: numeric("metric_value", parts[8]),
    });
  }
  return rows;
}

/** Elements across the domain ('21x21' -> 21, '7+7+7x21~s0.5' -> 21). */
export function meshWidth(mesh: string): number {
  const across = mesh.split("x")[0];
  const total = across
    .split("+")
    .map((token) => Number(token))
    .reduce((a, b) => a + b, 0);
  if (!Number.isFinite(total) || total <= 0) {
    throw new SchemaError(`cannot read element count from mesh '${mesh}'`);
  }
  return total;
}
