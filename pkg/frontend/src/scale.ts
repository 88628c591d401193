/** Axis scales: linear x, log10 y with power-of-ten ticks. */

export interface Scale {
  toPixel(v: number): number;
  ticks(): { value: number; label: string }[];
}

export function linearScale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  const span = hi - lo || 1;
  return {
    toPixel: (v) => pixLo + ((v - lo) / span) * (pixHi - pixLo),
    ticks: () => {
      const step = niceStep(span / 5);
      const out: { value: number; label: string }[] = [];
      for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
        out.push({ value: t, label: formatTick(t) });
      }
      return out;
    },
  };
}

export function logScale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  if (lo <= 0 || hi <= 0) {
    throw new Error("log scale needs positive bounds");
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  return {
    toPixel: (v) => pixLo + ((Math.log10(v) - llo) / span) * (pixHi - pixLo),
    ticks: () => {
      const out: { value: number; label: string }[] = [];
      const every = Math.max(1, Math.round(span / 8));
      for (let e = Math.ceil(llo); e <= Math.floor(lhi); e += every) {
        out.push({ value: 10 ** e, label: `1e${e}` });
      }
      return out;
    },
  };
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const unit = raw / mag;
  const nice = unit <= 1 ? 1 : unit <= 2 ? 2 : unit <= 5 ? 5 : 10;
  return nice * mag;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e6 || abs < 1e-3) return v.toExponential(0);
  return `${Number(v.toPrecision(6))}`;
}
