/** Synthetic trace files in the solver's exact CSV schema. */

import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import path from "path";

export const HEADER = "k,gamma,dist_sq,lyapunov,sigma_sq,oracle_calls,uplink_bits,gap";

export interface TraceShape {
  rate: number;          // per-iteration contraction of dist_sq
  floor?: number;        // additive noise floor
  rows?: number;
  callsPerIter?: number;
  bitsPerIter?: number;
  scale?: number;        // initial dist_sq
  gapEvery?: number;     // emit gap values every this many rows (0 = never)
}

export function traceCsv(shape: TraceShape, seed: number): string {
  const rows = shape.rows ?? 60;
  const floor = shape.floor ?? 0;
  const calls = shape.callsPerIter ?? 10;
  const bits = shape.bitsPerIter ?? 0;
  const scale = (shape.scale ?? 1) * (1 + 0.1 * seed);
  const lines = [HEADER];
  for (let k = 0; k < rows; k++) {
    const dist = scale * shape.rate ** k + floor;
    const gapCol =
      shape.gapEvery && k > 0 && k % shape.gapEvery === 0
        ? (10 / k).toExponential(8)
        : "";
    lines.push(
      [k, 0.1, dist.toExponential(10), dist.toExponential(10), 0,
       k * calls, k * bits, gapCol].join(","),
    );
  }
  return lines.join("\n") + "\n";
}

export function writeTraceSet(
  methods: Record<string, TraceShape>,
  seeds: number[],
): string {
  const dir = mkdtempSync(path.join(tmpdir(), "sgdalab-plots-"));
  for (const [label, shape] of Object.entries(methods)) {
    for (const seed of seeds) {
      writeFileSync(path.join(dir, `${label}_${seed}.csv`), traceCsv(shape, seed));
    }
  }
  return dir;
}

/** Trace sets shaped like the three built-in experiment figure sets. */
export const RECIPE_SHAPES: Record<string, Record<string, TraceShape>> = {
  vr_compare: {
    sgda_us: { rate: 0.995, floor: 1e-3, callsPerIter: 1, rows: 120 },
    lsvrg: { rate: 0.9, callsPerIter: 3, rows: 120 },
    saga: { rate: 0.92, callsPerIter: 1, rows: 120 },
    sega: { rate: 0.94, callsPerIter: 1, rows: 120 },
    vr_diana: { rate: 0.85, callsPerIter: 70, rows: 120 },
  },
  us_vs_is: {
    us: { rate: 0.999, floor: 1e-2, rows: 150, callsPerIter: 1 },
    is: { rate: 0.9, floor: 2e-4, rows: 150, callsPerIter: 1 },
  },
  qsgda_vs_diana_fullbatch: {
    qsgda: { rate: 0.9, floor: 1e-3, callsPerIter: 100, bitsPerIter: 3550, rows: 100 },
    diana: { rate: 0.9, callsPerIter: 100, bitsPerIter: 3550, rows: 100 },
    vr_diana: { rate: 0.93, callsPerIter: 30, bitsPerIter: 3550, rows: 100 },
  },
};
