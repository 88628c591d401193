"""Render convergence figures from CSV traces (log-y, per-method seed bands)."""

from __future__ import annotations

import fnmatch
import json
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sgdalab.solver import read_trace_csv  # noqa: E402

X_CHOICES = ("k", "oracle_calls", "uplink_bits")
Y_CHOICES = ("dist_sq", "lyapunov", "gap")


@dataclass
class PlotSpec:
    groups: list            # [{"label": str, "pattern": glob or explicit files}]
    x: str = "oracle_calls"
    y: str = "dist_sq"
    out: str = "figure.png"
    aggregate: str = "median"   # median with min/max band; "mean" as a flag

    def __post_init__(self):
        if self.x not in X_CHOICES:
            raise ValueError(f"x axis must be one of {X_CHOICES}")
        if self.y not in Y_CHOICES:
            raise ValueError(f"y axis must be one of {Y_CHOICES}")
        if self.aggregate not in ("median", "mean"):
            raise ValueError("aggregate must be 'median' or 'mean'")

    @staticmethod
    def from_dict(d: dict) -> "PlotSpec":
        return PlotSpec(groups=d["groups"], x=d.get("x", "oracle_calls"),
                        y=d.get("y", "dist_sq"), out=d.get("out", "figure.png"),
                        aggregate=d.get("aggregate", "median"))

    @staticmethod
    def load(path: str) -> "PlotSpec":
        with open(path) as f:
            return PlotSpec.from_dict(json.load(f))


def _resolve(pattern, base_dir: str) -> list[str]:
    if isinstance(pattern, (list, tuple)):
        return [os.path.join(base_dir, p) for p in pattern]
    dirname = os.path.dirname(pattern)
    folder = os.path.join(base_dir, dirname) if dirname else base_dir
    name = os.path.basename(pattern)
    if not os.path.isdir(folder):
        return []
    hits = sorted(fnmatch.filter(os.listdir(folder), name))
    return [os.path.join(folder, h) for h in hits]


def _load_group(files: list[str], x: str, y: str):
    """Per-seed curves aligned by row; y is normalized by its initial value."""
    xs, ys = [], []
    for path in files:
        cols = read_trace_csv(path)
        for col in (x, y):
            if col not in cols:
                raise ValueError(f"{path}: missing column {col!r}")
        yv = cols[y]
        keep = ~np.isnan(yv)
        if y == "gap":
            if not keep.any():
                raise ValueError(f"{path}: gap column is empty")
            xs.append(cols[x][keep])
            ys.append(yv[keep] / yv[keep][0])
        else:
            base = yv[0] if yv[0] > 0 else 1.0
            xs.append(cols[x])
            ys.append(yv / base)
    rows = min(len(v) for v in ys)
    xm = np.median(np.stack([v[:rows] for v in xs]), axis=0)
    ystack = np.stack([v[:rows] for v in ys])
    return xm, ystack


def render(spec: PlotSpec, base_dir: str = ".") -> str:
    """One figure per spec: log-y, one curve per method with a min/max band."""
    if not spec.groups:
        raise ValueError("plot spec has no groups")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    floor = 1e-300
    for group in spec.groups:
        files = _resolve(group["pattern"], base_dir)
        if not files:
            raise ValueError(f"pattern {group['pattern']!r} matched no trace files")
        xm, ystack = _load_group(files, spec.x, spec.y)
        center = (np.median(ystack, axis=0) if spec.aggregate == "median"
                  else np.mean(ystack, axis=0))
        line, = ax.plot(xm, np.maximum(center, floor), label=group["label"], lw=1.6)
        if ystack.shape[0] > 1:
            ax.fill_between(xm, np.maximum(ystack.min(axis=0), floor),
                            np.maximum(ystack.max(axis=0), floor),
                            alpha=0.2, color=line.get_color(), lw=0)
    ax.set_yscale("log")
    xlabel = {"k": "iteration", "oracle_calls": "oracle calls",
              "uplink_bits": "bits communicated"}[spec.x]
    ylabel = {"dist_sq": "relative squared distance", "lyapunov": "relative Lyapunov value",
              "gap": "relative restricted gap"}[spec.y]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.25)
    ax.legend()
    fig.tight_layout()
    out = os.path.join(base_dir, spec.out)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
