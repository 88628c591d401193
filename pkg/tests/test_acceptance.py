"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances are pinned here and match the stated contracts.
"""

import math

import numpy as np

from sgdalab.compression import Quantizer, enumerate_compressions, omega
from sgdalab.distributed import DianaEstimator, VrDianaEstimator
from sgdalab.estimators import (
    FullBatchEstimator,
    LooplessSvrgEstimator,
    SagaEstimator,
    SampledEstimator,
    SegaEstimator,
)
from sgdalab.experiment import build_problem, build_x0, run_experiment
from sgdalab.problem import (
    ProblemInstance,
    Regularizer,
    monotone_rotation_game,
    prox,
)
from sgdalab.recipes import builtin_recipe
from sgdalab.sampling import SamplingScheme
from sgdalab.solver import (
    BoxSet,
    ConstantStepsize,
    RunOptions,
    restricted_gap,
    run,
    theoretical_envelope,
)
from sgdalab.verify import (
    check_key_assumption,
    estimator_battery,
    exact_mean,
    fit_linear_rate,
    toy_problem,
)

from conftest import make_problem
from oracles import prox_oracle_1d


def report(num: int, desc: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    print(f"criterion {num:2d} [{status}] {desc} {detail}".rstrip())
    assert passed, f"criterion {num}: {desc} {detail}"


def test_criterion_01_prox_matches_grid_oracle():
    rng = np.random.Generator(np.random.PCG64(10))
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(0, 2)
        r = rng.uniform(0.05, 4)
        gamma = rng.uniform(0.01, 3)
        x = rng.uniform(-6, 6)
        reg = Regularizer("l1_box", lam=lam, radius=r)
        got = prox(reg, gamma, np.array([x]))[0]
        worst = max(worst, abs(got - prox_oracle_1d(lam, r, gamma, x)))
    report(1, "prox matches per-coordinate 1-D oracle within 1e-10", worst <= 1e-10,
           f"(worst {worst:.2e})")


def test_criterion_02_exact_unbiasedness():
    rng = np.random.Generator(np.random.PCG64(20))
    worst = 0.0
    for regularized in (False, True):
        p = toy_problem(n=4, d=3, regularized=regularized)
        x = p.reference_solution() + rng.standard_normal(p.dim)
        for name, est in estimator_battery(p):
            diff = np.linalg.norm(exact_mean(est, x) - p.operator.eval_full(x))
            worst = max(worst, diff)
    report(2, "enumerated E[g] = F(x) for every estimator within 1e-12",
           worst <= 1e-12, f"(worst {worst:.2e})")


def test_criterion_03_quantizer_moments():
    rng = np.random.Generator(np.random.PCG64(30))
    worst = 0.0
    for d in range(2, 9):
        for k in range(1, d + 1):
            q = Quantizer("randk", k=k)
            x = rng.standard_normal(d)
            mean = np.zeros(d)
            second = 0.0
            for pr, qv in enumerate_compressions(q, x):
                mean += pr * qv
                second += pr * np.sum((qv - x) ** 2)
            worst = max(worst, float(np.linalg.norm(mean - x)),
                        abs(second - omega(q, d) * float(x @ x)))
    report(3, "RandK enumerated mean and variance match within 1e-12",
           worst <= 1e-12, f"(worst {worst:.2e})")


def test_criterion_04_key_assumption_certification():
    worst = -math.inf
    for regularized in (False, True):
        p = toy_problem(n=4, d=3, regularized=regularized)
        for name, est in estimator_battery(p):
            rep = check_key_assumption(est, p, est.theory_params(p), points=1000,
                                       seed=40, tol=1e-8)
            worst = max(worst, rep.worst_violation)
    report(4, "both certified inequalities hold for every estimator "
              "(1000 points, exact enumeration, margin >= -1e-8)",
           worst <= 1e-8, f"(worst violation {worst:+.2e})")


def test_criterion_05_envelope_domination_100_seeds():
    p = make_problem(n=20, d=10, seed=8, mu_min=0.5, sym=0.5, skew=0.5, offset=20.0)
    rng = np.random.Generator(np.random.PCG64(50))
    v = rng.standard_normal(p.dim)
    x0 = p.reference_solution() + 4.0 * v / np.linalg.norm(v)
    worst_ratio = 0.0
    for make_est, horizon in [(lambda: FullBatchEstimator(), 100),
                              (lambda: LooplessSvrgEstimator(1.0 / p.n), 1200)]:
        probe = make_est()
        probe.reset(p, x0)
        tp = probe.theory_params(p)
        gamma = tp.stepsize_cap(p.constants.mu)
        traces = [run(p, make_est(), ConstantStepsize(gamma), horizon, seed=s, x0=x0,
                      options=RunOptions(record_every=5))
                  for s in range(100)]
        mean_vk = np.mean([t.col("lyapunov") for t in traces], axis=0)
        ks = traces[0].col("k")
        env = theoretical_envelope(tp, p.constants.mu, gamma, mean_vk[0], ks)
        worst_ratio = max(worst_ratio, float(np.max(mean_vk / env)))
    report(5, "mean V_k over 100 seeds stays within envelope x 1.1",
           worst_ratio <= 1.1, f"(worst ratio {worst_ratio:.4f})")


def _vr_compare_problem(regularized: bool) -> ProblemInstance:
    cfg = builtin_recipe("vr_compare", regularized=regularized)
    return build_problem(cfg["problem"]), cfg


def test_criterion_06_variance_reduction_budget():
    ok = True
    details = []
    for regularized in (False, True):
        problem, cfg = _vr_compare_problem(regularized)
        x0 = build_x0(cfg["x0"], problem)
        budget = 200 * problem.n
        n = problem.n
        runs = {
            "lsvrg": (LooplessSvrgEstimator(1.0 / n), budget // 3),
            "saga": (SagaEstimator(), budget - n),
            "sega": (SegaEstimator(), budget),
            "vr_diana": (VrDianaEstimator(10, Quantizer("identity"), p=1.0),
                         (budget - n) // 70),
        }
        for name, (est, horizon) in runs.items():
            gamma = est.theory_params(problem).stepsize_cap(problem.constants.mu)
            tr = run(problem, est, ConstantStepsize(gamma), horizon, seed=0, x0=x0,
                     options=RunOptions(record_every=10))
            rel = tr.col("dist_sq") / tr.col("dist_sq")[0]
            hit = (rel <= 1e-8) & (tr.col("oracle_calls") <= budget)
            ok &= bool(hit.any())
            details.append(f"{name}{'+l1' if regularized else ''}:"
                           f"{rel[-1]:.1e}@{int(tr.col('oracle_calls')[-1])}")
        sgda = SampledEstimator(SamplingScheme.uniform(1))
        gamma = sgda.theory_params(problem).stepsize_cap(problem.constants.mu)
        tr = run(problem, sgda, ConstantStepsize(gamma), budget, seed=0, x0=x0,
                 options=RunOptions(record_every=10))
        rel = tr.col("dist_sq") / tr.col("dist_sq")[0]
        ok &= bool(np.min(rel) > 1e-4)
        details.append(f"sgda_floor:{np.min(rel):.1e}")
    report(6, "variance-reduced methods reach 1e-8 within 200n calls, plain "
              "sampling plateaus above 1e-4", ok, "(" + " ".join(details) + ")")


def test_criterion_07_importance_vs_uniform(tmp_path):
    cfg = builtin_recipe("us_vs_is")
    out = str(tmp_path / "us_vs_is")
    run_experiment(cfg, out, threads=4)
    from sgdalab.solver import read_trace_csv

    plateaus, rates = {}, {}
    for label in ("us", "is"):
        finals, fitted = [], []
        for s in cfg["seeds"]:
            c = read_trace_csv(f"{out}/{label}_{s}.csv")
            q = len(c["k"]) // 4
            finals.append(np.median(c["dist_sq"][-q:]))
            rows = int(np.searchsorted(c["k"], 31))
            fitted.append(fit_linear_rate(c["k"][:rows], c["dist_sq"][:rows])[0])
        plateaus[label] = float(np.median(finals))
        rates[label] = float(np.median(fitted))
    ratio = plateaus["us"] / plateaus["is"]
    ok = ratio >= 5.0 and rates["is"] < rates["us"]
    report(7, "importance sampling: plateau at least 5x lower and faster fitted rate",
           ok, f"(plateau ratio {ratio:.1f}, rates is={rates['is']:.4f} "
               f"us={rates['us']:.4f})")


def test_criterion_08_shift_learning_beats_naive_compression(tmp_path):
    cfg = builtin_recipe("qsgda_vs_diana_fullbatch", seeds=[0])
    out = str(tmp_path / "qd")
    run_experiment(cfg, out)
    from sgdalab.solver import read_trace_csv

    rel = {}
    bits_per_round = {}
    for label in ("qsgda", "diana", "vr_diana"):
        c = read_trace_csv(f"{out}/{label}_0.csv")
        d0 = c["dist_sq"][0]
        q = len(c["k"]) // 4
        rel[label] = {"final": c["dist_sq"][-1] / d0,
                      "plateau": float(np.median(c["dist_sq"][-q:]) / d0)}
        bits_per_round[label] = ((c["uplink_bits"][-1] - c["uplink_bits"][0])
                                 / (c["k"][-1] - c["k"][0]))
    baseline = 10 * 100 * 64  # 10 workers, dense d=100 at 64-bit
    ok = (rel["diana"]["final"] <= 1e-8
          and rel["qsgda"]["plateau"] > 1e-4
          and rel["vr_diana"]["final"] <= 1e-8
          and bits_per_round["vr_diana"] <= 0.10 * baseline)
    report(8, "DIANA reaches 1e-8, QSGDA plateaus above 1e-4, VR-DIANA reaches "
              "1e-8 within 10% of uncompressed bits", ok,
           f"(diana {rel['diana']['final']:.1e}, qsgda plateau "
           f"{rel['qsgda']['plateau']:.1e}, vr bits {bits_per_round['vr_diana']:.0f}"
           f"/{baseline})")


def test_criterion_09_restricted_gap_trend():
    # strongly monotone instance: the gap vanishes at x*
    p_strong = make_problem(n=10, d=6, seed=90)
    xs = p_strong.reference_solution()
    g_at_star = restricted_gap(p_strong, BoxSet(xs, 2.0), xs, tol=1e-11).value

    # nearly-monotone instance (mu = 1e-6): averaged-iterate gap decays
    op = monotone_rotation_game(20, 10, seed=42, mu_min=1e-6)
    p = ProblemInstance(op)
    x_star = p.reference_solution()
    g_at_star2 = restricted_gap(p, BoxSet(x_star, 2.0), x_star, tol=1e-11).value

    est = SampledEstimator(SamplingScheme.uniform(1))
    gamma = est.theory_params(p).stepsize_cap(p.constants.mu)
    rng = np.random.Generator(np.random.PCG64(91))
    v = rng.standard_normal(p.dim)
    x0 = x_star + 2.0 * v / np.linalg.norm(v)
    tr = run(p, est, ConstantStepsize(gamma), 10_000, seed=7, x0=x0,
             options=RunOptions(record_every=1, record_x=True))
    box = BoxSet(center=x_star, radius=2 * float(np.max(np.abs(x0 - x_star))))
    iterates = tr.meta["x"]
    gaps = {}
    for k in (100, 10_000):
        xbar = iterates[1:k + 1].mean(axis=0)
        gaps[k] = restricted_gap(p, box, xbar, tol=1e-12, budget=60_000).value
    decay = gaps[100] / gaps[10_000]
    ok = g_at_star <= 1e-8 and g_at_star2 <= 1e-8 and decay >= 10.0
    report(9, "gap(x*) <= 1e-8 and averaged-iterate gap decays 10x from "
              "k=100 to k=1e4", ok,
           f"(gap* {max(g_at_star, g_at_star2):.1e}, decay {decay:.0f}x)")


def test_criterion_10_reduction_identities():
    p = make_problem(n=20, d=8, seed=2)
    rng = np.random.Generator(np.random.PCG64(100))
    x0 = p.reference_solution() + rng.standard_normal(p.dim)
    gamma = 0.3 / p.constants.ell
    worst = 0.0

    a = run(p, FullBatchEstimator(), ConstantStepsize(gamma), 100, seed=0, x0=x0)
    b = run(p, DianaEstimator(4, Quantizer("identity")), ConstantStepsize(gamma), 100,
            seed=0, x0=x0)
    worst = max(worst, float(np.max(np.abs(a.col("dist_sq") - b.col("dist_sq"))
                                    / (1 + a.col("dist_sq")))))

    gamma2 = 0.1 / p.constants.ell_hat
    c = run(p, LooplessSvrgEstimator(1.0 / p.n), ConstantStepsize(gamma2), 400,
            seed=3, x0=x0)
    d = run(p, VrDianaEstimator(1, Quantizer("identity"), p=1.0 / p.n),
            ConstantStepsize(gamma2), 400, seed=3, x0=x0)
    worst = max(worst, float(np.max(np.abs(c.col("dist_sq") - d.col("dist_sq"))
                                    / (1 + c.col("dist_sq")))))
    same_calls = (np.array_equal(a.col("oracle_calls"), b.col("oracle_calls"))
                  and np.array_equal(c.col("oracle_calls"), d.col("oracle_calls")))
    report(10, "identity-quantizer DIANA/VR-DIANA reproduce full-batch/L-SVRG "
               "traces to 1e-12", worst <= 1e-12 and same_calls,
           f"(worst rel diff {worst:.2e})")
