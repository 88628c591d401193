/**
 * Plot specs: which trace files become which curves.
 *
 * The JSON layout matches the solver's config:
 *   { "out": "fig.svg", "x": "oracle_calls", "y": "dist_sq",
 *     "groups": [{"label": "L-SVRG", "pattern": "lsvrg_*.csv"}, ...] }
 * Patterns are relative to a base directory; `*` matches within one path
 * segment.  A group pattern may also be an explicit list of files.
 */

import { readFileSync, readdirSync, statSync } from "fs";
import path from "path";

import { Aggregate, GroupCurve, aggregateGroup } from "./aggregate.js";
import { parseTraceCsv } from "./trace.js";

export const X_CHOICES = ["k", "oracle_calls", "uplink_bits"] as const;
export const Y_CHOICES = ["dist_sq", "lyapunov", "gap"] as const;

export interface GroupSpec {
  label: string;
  pattern: string | string[];
}

export interface PlotSpec {
  groups: GroupSpec[];
  x: (typeof X_CHOICES)[number];
  y: (typeof Y_CHOICES)[number];
  out: string;
  aggregate?: Aggregate;
}

export function validateSpec(raw: unknown): PlotSpec {
  const spec = raw as Partial<PlotSpec>;
  if (!spec || !Array.isArray(spec.groups) || spec.groups.length === 0) {
    throw new Error("plot spec needs a nonempty 'groups' list");
  }
  const x = spec.x ?? "oracle_calls";
  const y = spec.y ?? "dist_sq";
  if (!X_CHOICES.includes(x)) {
    throw new Error(`x axis must be one of ${X_CHOICES.join(", ")}`);
  }
  if (!Y_CHOICES.includes(y)) {
    throw new Error(`y axis must be one of ${Y_CHOICES.join(", ")}`);
  }
  const aggregate = spec.aggregate ?? "median";
  if (aggregate !== "median" && aggregate !== "mean") {
    throw new Error("aggregate must be 'median' or 'mean'");
  }
  for (const g of spec.groups) {
    if (!g.label || !g.pattern) {
      throw new Error("every group needs a label and a pattern");
    }
  }
  return { groups: spec.groups, x, y, out: spec.out ?? "figure.svg", aggregate };
}

export function loadSpec(specPath: string): PlotSpec {
  return validateSpec(JSON.parse(readFileSync(specPath, "utf8")));
}

export function resolvePattern(pattern: string | string[], baseDir: string): string[] {
  if (Array.isArray(pattern)) {
    return pattern.map((p) => (path.isAbsolute(p) ? p : path.join(baseDir, p)));
  }
  const dir = path.join(baseDir, path.dirname(pattern));
  const name = path.basename(pattern);
  let entries: string[];
  try {
    entries = readdirSync(dir);
  } catch {
    return [];
  }
  const rx = new RegExp(
    "^" + name.split("*").map(escapeRegex).join(".*") + "$",
  );
  return entries
    .filter((e) => rx.test(e) && statSync(path.join(dir, e)).isFile())
    .sort()
    .map((e) => path.join(dir, e));
}

function escapeRegex(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

export function buildCurves(spec: PlotSpec, baseDir: string): GroupCurve[] {
  return spec.groups.map((g) => {
    const files = resolvePattern(g.pattern, baseDir);
    if (files.length === 0) {
      throw new Error(`pattern '${g.pattern}' matched no trace files`);
    }
    const traces = files.map((f) => parseTraceCsv(readFileSync(f, "utf8")));
    return aggregateGroup(g.label, traces, spec.x, spec.y, spec.aggregate);
  });
}

export const AXIS_LABELS: Record<string, string> = {
  k: "iteration",
  oracle_calls: "oracle calls",
  uplink_bits: "bits communicated",
  dist_sq: "relative squared distance",
  lyapunov: "relative Lyapunov value",
  gap: "relative restricted gap",
};
