/**
 * Seed aggregation: one group = one method = several trace files.
 *
 * Curves from different seeds share the iteration grid (same record_every),
 * so they are aligned by row index.  The y column is normalized by its
 * initial value per run; the group's center curve is the median across seeds
 * (mean optional) with a min/max band.
 */

import { Trace, column } from "./trace.js";

export interface GroupCurve {
  label: string;
  x: number[];
  center: number[];
  lo: number[];
  hi: number[];
  seeds: number;
}

export type Aggregate = "median" | "mean";

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

function normalized(y: number[]): number[] {
  const rows: number[] = [];
  const base = y.find((v) => Number.isFinite(v));
  if (base === undefined) {
    throw new Error("y column has no finite values");
  }
  const denom = base > 0 ? base : 1;
  for (const v of y) {
    rows.push(v / denom);
  }
  return rows;
}

export function aggregateGroup(
  label: string,
  traces: Trace[],
  xCol: string,
  yCol: string,
  how: Aggregate = "median",
): GroupCurve {
  if (traces.length === 0) {
    throw new Error(`group '${label}' has no traces`);
  }
  const xs = traces.map((t) => column(t, xCol));
  const ys = traces.map((t) => {
    const raw = column(t, yCol);
    const keep: number[] = [];
    const kept = raw.map((v, i) => ({ v, i })).filter(({ v }) => !Number.isNaN(v));
    if (yCol === "gap") {
      if (kept.length === 0) {
        throw new Error(`group '${label}': gap column is empty`);
      }
      return { idx: kept.map(({ i }) => i), y: normalized(kept.map(({ v }) => v)) };
    }
    void keep;
    return { idx: raw.map((_, i) => i), y: normalized(raw) };
  });
  const rows = Math.min(...ys.map((s) => s.y.length));
  const x: number[] = [];
  const center: number[] = [];
  const lo: number[] = [];
  const hi: number[] = [];
  for (let r = 0; r < rows; r++) {
    const xvals = ys.map((s, t) => xs[t][s.idx[r]]);
    const yvals = ys.map((s) => s.y[r]);
    x.push(median(xvals));
    center.push(how === "median" ? median(yvals) : yvals.reduce((a, b) => a + b) / yvals.length);
    lo.push(Math.min(...yvals));
    hi.push(Math.max(...yvals));
  }
  return { label, x, center, lo, hi, seeds: traces.length };
}
