/**
 * Trace CSV parsing.
 *
 * The solver writes one CSV per run with the fixed header
 *   k,gamma,dist_sq,lyapunov,sigma_sq,oracle_calls,uplink_bits,gap
 * Values are plain decimal floats; an empty field means "not computed"
 * and is parsed as NaN.
 */

export const TRACE_COLUMNS = [
  "k",
  "gamma",
  "dist_sq",
  "lyapunov",
  "sigma_sq",
  "oracle_calls",
  "uplink_bits",
  "gap",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export interface Trace {
  columns: Map<string, number[]>;
  rows: number;
}

export function parseTraceCsv(text: string): Trace {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length < 1) {
    throw new Error("empty trace file");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new Error(`row ${i}: expected ${header.length} fields, got ${cells.length}`);
    }
    for (let c = 0; c < header.length; c++) {
      const raw = cells[c].trim();
      const value = raw === "" ? NaN : Number(raw);
      if (raw !== "" && !Number.isFinite(value) && raw !== "inf" && raw !== "nan") {
        throw new Error(`row ${i}, column ${header[c]}: bad number ${raw}`);
      }
      columns.get(header[c])!.push(value);
    }
  }
  return { columns, rows: lines.length - 1 };
}

export function column(trace: Trace, name: string): number[] {
  const col = trace.columns.get(name);
  if (!col) {
    throw new Error(`missing column '${name}'`);
  }
  return col;
}
