"""Experiment orchestration: config parsing, sweeps, manifests, persistence.

Configs are plain JSON with a schema_version field.  A sweep runs every
(method, seed) cell, writes one CSV trace per run plus a manifest, and never
aborts on a divergent run (divergences are recorded and reported).
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from sgdalab import problem as prob
from sgdalab.compression import Quantizer
from sgdalab.distributed import DianaEstimator, QsgdaEstimator, VrDianaEstimator
from sgdalab.estimators import (
    CoordinateEstimator,
    FullBatchEstimator,
    LooplessSvrgEstimator,
    SagaEstimator,
    SampledEstimator,
    SegaEstimator,
)
from sgdalab.sampling import SamplingScheme
from sgdalab.solver import (
    ConstantStepsize,
    RunOptions,
    decreasing_from_theory,
    run,
    write_trace_csv,
)

SCHEMA_VERSION = 1
GRID_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


class ConfigError(ValueError):
    pass


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def build_problem(cfg: dict) -> prob.ProblemInstance:
    """Problem block: either a generator config or a path to a problem file."""
    _require(isinstance(cfg, dict), "problem block must be an object")
    if "path" in cfg and cfg["path"]:
        instance = prob.load_problem(cfg["path"])
    else:
        _require("generator" in cfg, "problem block needs 'generator' or 'path'")
        g = dict(cfg["generator"])
        try:
            gen = prob.GeneratorConfig(**g)
        except TypeError as e:
            raise ConfigError(f"bad generator config: {e}") from None
        op = prob.generate_quadratic_game(gen)
        instance = prob.ProblemInstance(op, generator=gen)
    sc = cfg.get("scale_component")
    if sc:
        idx, factor = int(sc["index"]), float(sc["factor"])
        mats = instance.operator.matrices.copy()
        offs = instance.operator.offsets.copy()
        mats[idx] *= factor
        offs[idx] *= factor
        instance = prob.ProblemInstance(
            prob.FiniteSumOperator.from_arrays(mats, offs), generator=instance.generator
        )
    reg_cfg = cfg.get("regularizer")
    if reg_cfg:
        radius = reg_cfg.get("radius", "inf")
        radius = math.inf if radius in ("inf", None) else float(radius)
        reg = prob.Regularizer(kind=reg_cfg.get("kind", "none"),
                               lam=float(reg_cfg.get("lam", 0.0)), radius=radius)
        instance = instance.with_regularizer(reg)
    return instance


def build_x0(cfg: dict | None, problem: prob.ProblemInstance) -> np.ndarray:
    if not cfg or cfg.get("kind", "zeros") == "zeros":
        return np.zeros(problem.dim)
    kind = cfg["kind"]
    seed = int(cfg.get("seed", 0))
    scale = float(cfg.get("scale", 1.0))
    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "gaussian":
        return scale * rng.standard_normal(problem.dim)
    if kind == "offset":
        # x* plus a fixed-length random direction: ||x0 - x*|| = scale exactly
        v = rng.standard_normal(problem.dim)
        x0 = problem.reference_solution() + scale * v / np.linalg.norm(v)
        if not math.isinf(problem.regularizer.radius):
            x0 = np.clip(x0, -problem.regularizer.radius, problem.regularizer.radius)
        return x0
    raise ConfigError(f"unknown x0 kind {kind!r}")


def build_estimator(name: str, params: dict, problem: prob.ProblemInstance):
    params = dict(params or {})
    if name == "full_batch":
        return FullBatchEstimator()
    if name == "sgda":
        sampling = params.get("sampling", "uniform")
        batch = int(params.get("batch", 1))
        if sampling == "uniform":
            scheme = SamplingScheme.uniform(batch)
        elif sampling == "without_replacement":
            scheme = SamplingScheme.without_replacement(batch)
        elif sampling == "importance":
            scheme = SamplingScheme.importance(problem.constants.ell_i, batch)
        else:
            raise ConfigError(f"unknown sampling {sampling!r}")
        return SampledEstimator(scheme)
    if name == "lsvrg":
        return LooplessSvrgEstimator(float(params.get("p", 1.0 / problem.n)))
    if name == "saga":
        return SagaEstimator()
    if name == "coord":
        return CoordinateEstimator(int(params.get("query_cost", 1)))
    if name == "sega":
        return SegaEstimator(int(params.get("query_cost", 1)))
    if name in ("qsgda", "diana", "vr_diana"):
        q = params.get("quantizer", {"kind": "identity"})
        quant = Quantizer(kind=q.get("kind", "identity"), k=int(q.get("k", 0)))
        workers = int(params.get("workers", params.get("n_workers", 1)))
        sigma = params.get("sigma", params.get("sigma_i", 0.0))
        bits = int(params.get("value_bits", 64))
        if name == "qsgda":
            return QsgdaEstimator(workers, quant, sigma, bits)
        if name == "diana":
            return DianaEstimator(workers, quant, params.get("alpha"), sigma, bits,
                                  params.get("h0", "zeros"))
        return VrDianaEstimator(workers, quant, params.get("alpha"), params.get("p"),
                                bits, params.get("h0", "zeros"),
                                bool(params.get("shared_restart", False)))
    raise ConfigError(f"unknown method {name!r}")


@dataclass
class MethodSpec:
    name: str
    label: str
    params: dict
    stepsize: dict
    K: int
    record_every: int

    @staticmethod
    def from_dict(m: dict, default_k: int, default_every: int) -> "MethodSpec":
        _require("name" in m, "method entry needs a 'name'")
        return MethodSpec(
            name=m["name"],
            label=m.get("label", m["name"]),
            params=m.get("params", {}),
            stepsize=m.get("stepsize", {"kind": "theory"}),
            K=int(m.get("K", default_k)),
            record_every=int(m.get("record_every", default_every)),
        )


def _resolve_gamma(spec: MethodSpec, estimator, problem) -> tuple[object, float]:
    """Build the schedule; returns (schedule, gamma0)."""
    ss = spec.stepsize
    kind = ss.get("kind", "theory")
    if kind == "constant":
        g = float(ss["gamma"])
        return ConstantStepsize(g), g
    tp = estimator.theory_params(problem)
    if kind == "theory":
        g = tp.stepsize_cap(problem.constants.mu) * float(ss.get("factor", 1.0))
        return ConstantStepsize(g), g
    if kind == "decreasing":
        sched = decreasing_from_theory(tp, problem.constants.mu, spec.K)
        return sched, sched.at(0)
    raise ConfigError(f"unknown stepsize kind {kind!r}")


def _run_cell(problem, spec: MethodSpec, seed: int, x0, options: RunOptions,
              gamma_override: float | None = None):
    estimator = build_estimator(spec.name, spec.params, problem)
    if gamma_override is not None:
        schedule = ConstantStepsize(gamma_override)
    else:
        schedule, _ = _resolve_gamma(spec, estimator, problem)
    trace = run(problem, estimator, schedule, spec.K, seed, x0=x0, options=options)
    return trace


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def run_experiment(cfg: dict, out_dir: str, threads: int = 1) -> dict:
    """Run every (method, seed) cell; write traces, manifest, and figures."""
    _require(cfg.get("schema_version") == SCHEMA_VERSION,
             f"config schema_version must be {SCHEMA_VERSION}")
    methods_cfg = cfg.get("methods", [])
    _require(len(methods_cfg) > 0, "no methods configured")
    seeds = [int(s) for s in cfg.get("seeds", [0])]
    _require(len(seeds) > 0, "no seeds configured")
    default_k = int(cfg.get("K", 1000))
    default_every = int(cfg.get("record_every", 1))

    problem = build_problem(cfg.get("problem", {}))
    c = problem.constants             # force constants and x* before the pool
    x_star = problem.reference_solution()
    x0 = build_x0(cfg.get("x0"), problem)

    metrics = cfg.get("metrics", {})
    options = RunOptions(
        record_every=default_every,
        gap_every=int(metrics.get("gap_every", 0)),
        gap_box_factor=float(metrics.get("gap_box_factor", 2.0)),
        gap_tol=float(metrics.get("gap_tol", 1e-9)),
        gap_budget=int(metrics.get("gap_budget", 20_000)),
    )

    specs = [MethodSpec.from_dict(m, default_k, default_every) for m in methods_cfg]
    labels = [s.label for s in specs]
    _require(len(set(labels)) == len(labels), "method labels must be unique")

    os.makedirs(out_dir, exist_ok=True)
    prob.save_problem(problem, os.path.join(out_dir, "problem.json"))

    chosen_gammas = {}
    for spec in specs:
        if spec.stepsize.get("kind") == "grid":
            chosen_gammas[spec.label] = _grid_search(problem, spec, seeds[0], x0, options)

    cells = [(i, seed) for i in range(len(specs)) for seed in seeds]
    results = {}

    def work(cell):
        i, seed = cell
        spec = specs[i]
        opts = RunOptions(record_every=spec.record_every, gap_every=options.gap_every,
                          gap_box_factor=options.gap_box_factor,
                          gap_tol=options.gap_tol, gap_budget=options.gap_budget)
        return cell, _run_cell(problem, spec, seed, x0, opts,
                               gamma_override=chosen_gammas.get(spec.label))

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            for cell, trace in pool.map(work, cells):
                results[cell] = trace
    else:
        for cell in cells:
            results[cell] = work(cell)[1]

    traces_index = []
    divergences = []
    for (i, seed), trace in sorted(results.items()):
        spec = specs[i]
        fname = f"{spec.label}_{seed}.csv"
        write_trace_csv(trace, os.path.join(out_dir, fname))
        entry = {"method": spec.label, "seed": seed, "file": fname,
                 "final_dist_sq": None if math.isnan(trace.final("dist_sq"))
                 else trace.final("dist_sq"),
                 "oracle_calls": int(trace.final("oracle_calls")),
                 "uplink_bits": int(trace.final("uplink_bits"))}
        if trace.diverged_at is not None:
            entry["diverged_at"] = trace.diverged_at
            divergences.append(entry)
        traces_index.append(entry)

    from sgdalab import __version__

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "config": cfg,
        "config_hash": _config_hash({"config": cfg, "version": __version__}),
        "constants": {
            "mu": c.mu, "ell": c.ell, "ell_bar": c.ell_bar,
            "ell_hat": c.ell_hat, "ell_max": c.ell_max,
        },
        "x_star": prob._encode_array(x_star),
        "x_star_residual": problem.reference_residual,
        "x0": prob._encode_array(x0),
        "chosen_gammas": chosen_gammas,
        "traces": sorted(traces_index, key=lambda e: (e["method"], e["seed"])),
        "divergences": [e["file"] for e in divergences],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)

    for spec_cfg in cfg.get("plots", []):
        from sgdalab.plots import PlotSpec, render
        render(PlotSpec.from_dict(spec_cfg), base_dir=out_dir)

    return manifest


def _grid_search(problem, spec: MethodSpec, pilot_seed: int, x0,
                 options: RunOptions) -> float:
    """Pick the best constant step from theory_gamma * GRID_FACTORS on one seed."""
    estimator = build_estimator(spec.name, spec.params, problem)
    estimator.reset(problem, x0)
    base = estimator.theory_params(problem).stepsize_cap(problem.constants.mu)
    best_gamma, best_val = None, math.inf
    for f in spec.stepsize.get("factors", GRID_FACTORS):
        gamma = base * f
        trace = _run_cell(problem, spec, pilot_seed, x0, options, gamma_override=gamma)
        if trace.diverged_at is not None:
            continue
        val = trace.final("dist_sq")
        if val < best_val:
            best_gamma, best_val = gamma, val
    if best_gamma is None:
        raise RuntimeError(f"grid search for {spec.label}: every step size diverged")
    return best_gamma


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
