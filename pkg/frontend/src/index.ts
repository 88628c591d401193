export { parseTraceCsv, column, TRACE_COLUMNS } from "./trace.js";
export { aggregateGroup } from "./aggregate.js";
export type { GroupCurve, Aggregate } from "./aggregate.js";
export { linearScale, logScale } from "./scale.js";
export { renderFigure } from "./svg.js";
export {
  AXIS_LABELS,
  buildCurves,
  loadSpec,
  resolvePattern,
  validateSpec,
} from "./plotspec.js";
export type { PlotSpec, GroupSpec } from "./plotspec.js";
export { run } from "./cli.js";
