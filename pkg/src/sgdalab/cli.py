"""Command-line interface.

Subcommands: gen (emit a problem file), run (config -> traces + figures),
recipe (named builtin experiment), verify (check battery -> JSON reports),
gap (evaluate the restricted gap at a saved point), plot (render figures from
traces).  Exit codes: 0 success, 1 config error, 2 check failure,
3 divergence-only failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a quadratic game and write a problem file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu-min", type=float, default=1.0)
    p.add_argument("--mode", default="symmetric_plus_skew",
                   choices=["symmetric_plus_skew", "spectral_flip"])
    p.add_argument("--offset-scale", type=float, default=100.0)
    p.add_argument("--sym-scale", type=float, default=1.0)
    p.add_argument("--skew-scale", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.0, help="l1 weight (0 = none)")
    p.add_argument("--radius", type=float, default=math.inf, help="box radius")
    p.add_argument("--out", required=True)


def _add_run(sub):
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", help="comma-separated seed override")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--record-every", type=int)


def _add_recipe(sub):
    p = sub.add_parser("recipe", help="run a builtin experiment recipe")
    p.add_argument("name")
    p.add_argument("--out", required=True)
    p.add_argument("--regularized", action="store_true")
    p.add_argument("--seeds", help="comma-separated seed override")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dump-config", action="store_true",
                   help="print the config instead of running it")


def _add_verify(sub):
    p = sub.add_parser("verify", help="run the verification battery")
    p.add_argument("--problem", help="problem file (defaults to builtin toy instances)")
    p.add_argument("--out", help="directory for per-check JSON reports")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)


def _add_gap(sub):
    p = sub.add_parser("gap", help="evaluate the restricted gap at a saved iterate")
    p.add_argument("--problem", required=True)
    p.add_argument("--point", required=True,
                   help="JSON file holding the iterate as a list of floats")
    p.add_argument("--box-radius", type=float)
    p.add_argument("--box-factor", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--budget", type=int, default=20000)


def _add_plot(sub):
    p = sub.add_parser("plot", help="render a figure from trace CSVs")
    p.add_argument("traces", nargs="*", help="trace CSV files (or use --spec)")
    p.add_argument("--spec", help="plot spec JSON file")
    p.add_argument("--base-dir", default=".")
    p.add_argument("--x", default="oracle_calls")
    p.add_argument("--y", default="dist_sq")
    p.add_argument("--out", default="figure.png")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sgdalab")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_gen, _add_run, _add_recipe, _add_verify, _add_gap, _add_plot):
        add(sub)
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except Exception as e:  # config and validation errors exit with code 1
        from sgdalab.experiment import ConfigError

        if isinstance(e, (ConfigError, ValueError, FileNotFoundError)):
            print(f"error: {e}", file=sys.stderr)
            return 1
        raise


def _dispatch(args) -> int:
    if args.command == "gen":
        return _cmd_gen(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "recipe":
        return _cmd_recipe(args)
    if args.command == "verify":
        return _cmd_verify(args)
    if args.command == "gap":
        return _cmd_gap(args)
    if args.command == "plot":
        return _cmd_plot(args)
    raise AssertionError(args.command)


def _cmd_gen(args) -> int:
    from sgdalab import problem as prob

    cfg = prob.GeneratorConfig(n=args.n, d=args.d, seed=args.seed, mu_min=args.mu_min,
                               mode=args.mode, offset_scale=args.offset_scale,
                               sym_scale=args.sym_scale, skew_scale=args.skew_scale)
    op = prob.generate_quadratic_game(cfg)
    if args.lam > 0 or not math.isinf(args.radius):
        reg = prob.Regularizer("l1_box", lam=args.lam, radius=args.radius)
    else:
        reg = prob.Regularizer()
    instance = prob.ProblemInstance(op, reg, cfg)
    prob.save_problem(instance, args.out)
    c = instance.constants
    print(f"wrote {args.out}: n={op.n} d={op.dim} mu={c.mu:.6g} ell={c.ell:.6g} "
          f"ell_max={c.ell_max:.6g}")
    return 0


def _summarize_run(manifest: dict) -> int:
    n_div = len(manifest["divergences"])
    n_tr = len(manifest["traces"])
    print(f"ran {n_tr} (method, seed) cells; config hash {manifest['config_hash']}")
    for t in manifest["traces"]:
        status = f"DIVERGED at k={t['diverged_at']}" if "diverged_at" in t else "ok"
        final = t["final_dist_sq"]
        final_s = "n/a" if final is None else f"{final:.3e}"
        print(f"  {t['file']:32s} dist_sq={final_s} calls={t['oracle_calls']} {status}")
    if n_div:
        print(f"{n_div} run(s) diverged")
        return 3
    return 0


def _cmd_run(args) -> int:
    from sgdalab.experiment import load_config, run_experiment

    cfg = load_config(args.config)
    if args.seeds:
        cfg["seeds"] = [int(s) for s in args.seeds.split(",")]
    if args.record_every:
        cfg["record_every"] = args.record_every
    manifest = run_experiment(cfg, args.out, threads=args.threads)
    return _summarize_run(manifest)


def _cmd_recipe(args) -> int:
    from sgdalab.experiment import run_experiment
    from sgdalab.recipes import builtin_recipe

    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    cfg = builtin_recipe(args.name, regularized=args.regularized, seeds=seeds)
    if args.dump_config:
        print(json.dumps(cfg, indent=1))
        return 0
    manifest = run_experiment(cfg, args.out, threads=args.threads)
    return _summarize_run(manifest)


def _cmd_verify(args) -> int:
    from sgdalab.problem import load_problem
    from sgdalab.verify import standard_suite

    problem = load_problem(args.problem) if args.problem else None
    reports = standard_suite(problem, points=args.points, seed=args.seed)
    failures = 0
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        print(f"[{status}] {rep.name}: worst violation {rep.worst_violation:.3e} "
              f"(tol {rep.tolerance:g}, {rep.mode}, {rep.trials} trials)")
        if not rep.passed:
            failures += 1
        if args.out:
            safe = rep.name.replace("[", "_").replace("]", "").replace("/", "_")
            with open(os.path.join(args.out, f"{safe}.json"), "w") as f:
                json.dump(rep.to_dict(), f, indent=1)
    print(f"{len(reports) - failures}/{len(reports)} checks passed")
    return 2 if failures else 0


def _cmd_gap(args) -> int:
    from sgdalab.problem import load_problem
    from sgdalab.solver import BoxSet, restricted_gap

    problem = load_problem(args.problem)
    with open(args.point) as f:
        z = np.asarray(json.load(f), dtype=np.float64)
    x_star = problem.reference_solution()
    if args.box_radius is not None:
        radius = args.box_radius
    else:
        radius = args.box_factor * max(float(np.max(np.abs(z - x_star))), 1e-8)
    box = BoxSet(center=x_star, radius=radius)
    res = restricted_gap(problem, box, z, tol=args.tol, budget=args.budget)
    print(json.dumps({"gap": res.value, "converged": res.converged,
                      "grad_map_norm": res.grad_map_norm,
                      "iterations": res.iterations, "box_radius": radius}))
    return 0


def _cmd_plot(args) -> int:
    from sgdalab.plots import PlotSpec, render

    if args.spec:
        spec = PlotSpec.load(args.spec)
    else:
        if not args.traces:
            raise ValueError("pass trace CSVs or --spec")
        spec = PlotSpec(groups=[{"label": os.path.basename(t), "pattern": [t]}
                                for t in args.traces],
                        x=args.x, y=args.y, out=args.out)
    out = render(spec, base_dir=args.base_dir)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
