#!/usr/bin/env node
/**
 * Render convergence figures from sgdalab trace CSVs.
 *
 * Usage:
 *   sgdalab-plots --spec plotspec.json [--base-dir results/]
 *   sgdalab-plots trace1.csv trace2.csv --x oracle_calls --y dist_sq --out fig.svg
 */

import { writeFileSync } from "fs";
import path from "path";

import { AXIS_LABELS, PlotSpec, buildCurves, loadSpec, validateSpec } from "./plotspec.js";
import { renderFigure } from "./svg.js";

interface Args {
  spec?: string;
  baseDir: string;
  traces: string[];
  x: string;
  y: string;
  out: string;
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { baseDir: ".", traces: [], x: "oracle_calls", y: "dist_sq",
                       out: "figure.svg" };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`flag ${a} needs a value`);
      return argv[++i];
    };
    if (a === "--spec") args.spec = next();
    else if (a === "--base-dir") args.baseDir = next();
    else if (a === "--x") args.x = next();
    else if (a === "--y") args.y = next();
    else if (a === "--out") args.out = next();
    else if (a.startsWith("--")) throw new Error(`unknown flag ${a}`);
    else args.traces.push(a);
  }
  return args;
}

export function run(argv: string[]): string {
  const args = parseArgs(argv);
  let spec: PlotSpec;
  if (args.spec) {
    spec = loadSpec(args.spec);
  } else {
    if (args.traces.length === 0) {
      throw new Error("pass trace CSVs or --spec");
    }
    spec = validateSpec({
      groups: args.traces.map((t) => ({ label: path.basename(t, ".csv"),
                                        pattern: [t] })),
      x: args.x,
      y: args.y,
      out: args.out,
    });
  }
  const curves = buildCurves(spec, args.baseDir);
  const svg = renderFigure(curves, {
    xLabel: AXIS_LABELS[spec.x],
    yLabel: AXIS_LABELS[spec.y],
  });
  const outPath = path.isAbsolute(spec.out) ? spec.out
    : path.join(args.baseDir, spec.out);
  writeFileSync(outPath, svg);
  return outPath;
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url.endsWith(path.basename(process.argv[1]));
if (invokedDirectly) {
  try {
    const out = run(process.argv.slice(2));
    console.log(`wrote ${out}`);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
