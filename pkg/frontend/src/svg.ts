/** SVG figure rendering: log-y convergence curves with min/max seed bands. */

import { GroupCurve } from "./aggregate.js";
import { linearScale, logScale } from "./scale.js";

export interface FigureOptions {
  width?: number;
  height?: number;
  xLabel?: string;
  yLabel?: string;
  yFloor?: number; // values below this are clamped so log scaling stays finite
}

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#e377c2",
];

const MARGIN = { left: 64, right: 16, top: 14, bottom: 44 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderFigure(groups: GroupCurve[], opts: FigureOptions = {}): string {
  if (groups.length === 0) {
    throw new Error("nothing to plot");
  }
  const width = opts.width ?? 640;
  const height = opts.height ?? 440;
  const floor = opts.yFloor ?? 1e-30;

  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const g of groups) {
    for (let i = 0; i < g.x.length; i++) {
      xMin = Math.min(xMin, g.x[i]);
      xMax = Math.max(xMax, g.x[i]);
      const lo = Math.max(g.lo[i], floor);
      const hi = Math.max(g.hi[i], floor);
      if (Number.isFinite(lo)) yMin = Math.min(yMin, lo);
      if (Number.isFinite(hi)) yMax = Math.max(yMax, hi);
    }
  }
  if (!Number.isFinite(yMin) || !Number.isFinite(yMax)) {
    throw new Error("no finite y values to plot");
  }
  if (yMin === yMax) {
    yMin /= 10;
    yMax *= 10;
  }
  const sx = linearScale(xMin, xMax, MARGIN.left, width - MARGIN.right);
  const sy = logScale(yMin, yMax, height - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  for (const t of sy.ticks()) {
    const y = sy.toPixel(t.value);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(1)}" x2="${width - MARGIN.right}" ` +
        `y2="${y.toFixed(1)}" stroke="#dddddd" stroke-width="0.6"/>`,
      `<text x="${MARGIN.left - 6}" y="${(y + 3).toFixed(1)}" text-anchor="end">` +
        `${esc(t.label)}</text>`,
    );
  }
  for (const t of sx.ticks()) {
    const x = sx.toPixel(t.value);
    parts.push(
      `<line x1="${x.toFixed(1)}" y1="${MARGIN.top}" x2="${x.toFixed(1)}" ` +
        `y2="${height - MARGIN.bottom}" stroke="#eeeeee" stroke-width="0.6"/>`,
      `<text x="${x.toFixed(1)}" y="${height - MARGIN.bottom + 16}" ` +
        `text-anchor="middle">${esc(t.label)}</text>`,
    );
  }

  groups.forEach((g, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const px = (i: number) => sx.toPixel(g.x[i]).toFixed(2);
    const py = (v: number) => sy.toPixel(Math.max(v, floor)).toFixed(2);
    if (g.seeds > 1) {
      const fwd = g.x.map((_, i) => `${px(i)},${py(g.hi[i])}`);
      const back = [...g.x.keys()].reverse().map((i) => `${px(i)},${py(g.lo[i])}`);
      parts.push(
        `<polygon points="${fwd.concat(back).join(" ")}" fill="${color}" ` +
          `opacity="0.15" stroke="none"/>`,
      );
    }
    const pts = g.x.map((_, i) => `${px(i)},${py(g.center[i])}`).join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
    );
  });

  // axes frame, labels, legend
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${width - MARGIN.left - MARGIN.right}" ` +
      `height="${height - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#444444"/>`,
  );
  if (opts.xLabel) {
    parts.push(
      `<text x="${(MARGIN.left + width - MARGIN.right) / 2}" y="${height - 8}" ` +
        `text-anchor="middle">${esc(opts.xLabel)}</text>`,
    );
  }
  if (opts.yLabel) {
    parts.push(
      `<text x="14" y="${(MARGIN.top + height - MARGIN.bottom) / 2}" text-anchor="middle" ` +
        `transform="rotate(-90 14 ${(MARGIN.top + height - MARGIN.bottom) / 2})">` +
        `${esc(opts.yLabel)}</text>`,
    );
  }
  groups.forEach((g, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const lx = MARGIN.left + 10;
    const ly = MARGIN.top + 14 + gi * 15;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 18}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="2"/>`,
      `<text x="${lx + 24}" y="${ly}">${esc(g.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
