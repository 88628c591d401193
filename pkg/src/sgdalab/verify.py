"""Verification suite: exact and Monte-Carlo checks of the estimator contracts.

Exact mode enumerates the estimator's randomness (component index, coordinate
index, compression subsets) and compares both sides of the certified
inequalities; it is exact up to float round-off.  Monte-Carlo mode is used
where the randomness is continuous (Gaussian worker noise) and applies a
3-standard-error band.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from sgdalab.compression import enumerate_compressions
from sgdalab.distributed import (
    DianaEstimator,
    DistributedEstimator,
    QsgdaEstimator,
    VrDianaEstimator,
)
from sgdalab.estimators import (
    CoordinateEstimator,
    Estimator,
    FullBatchEstimator,
    LooplessSvrgEstimator,
    SagaEstimator,
    SampledEstimator,
    SegaEstimator,
)
from sgdalab.problem import ProblemInstance
from sgdalab.sampling import enumerate_draws
from sgdalab.theory import TheoryParams


@dataclass
class CheckReport:
    name: str
    mode: str
    trials: int
    worst_violation: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "trials": self.trials,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }


def _report(name, mode, trials, worst, tol, **details) -> CheckReport:
    return CheckReport(name=name, mode=mode, trials=trials,
                       worst_violation=float(worst), tolerance=tol,
                       passed=bool(worst <= tol), details=details)


# ---------------------------------------------------------------------------
# Exact conditional moments by enumeration of the estimator's randomness
# ---------------------------------------------------------------------------

def _enumerate_gradients(est: Estimator, x: np.ndarray):
    """All (probability, g) outcomes of one sample() call from the current state."""
    op = est.op
    if isinstance(est, FullBatchEstimator):
        yield 1.0, op.eval_full(x)
    elif isinstance(est, SampledEstimator):
        vals = op.eval_components(x)
        for p, idx, w in enumerate_draws(est.scheme, op.n):
            yield p, (w @ vals[idx]) / op.n
    elif isinstance(est, LooplessSvrgEstimator):
        vx, vw = op.eval_components(x), op.eval_components(est.w)
        for j in range(op.n):
            yield 1.0 / op.n, vx[j] - vw[j] + est.f_w
    elif isinstance(est, SagaEstimator):
        vx = op.eval_components(x)
        for j in range(op.n):
            yield 1.0 / op.n, vx[j] - est.table[j] + est.table_mean
    elif isinstance(est, CoordinateEstimator):
        f = op.eval_full(x)
        d = len(f)
        for j in range(d):
            g = np.zeros(d)
            g[j] = d * f[j]
            yield 1.0 / d, g
    elif isinstance(est, SegaEstimator):
        f = op.eval_full(x)
        d = len(f)
        for j in range(d):
            g = est.h.copy()
            g[j] += d * (f[j] - est.h[j])
            yield 1.0 / d, g
    elif isinstance(est, DistributedEstimator):
        yield from _enumerate_distributed(est, x)
    else:
        raise TypeError(f"no enumeration for {type(est).__name__}")


def _worker_messages(est: DistributedEstimator, i: int, x: np.ndarray):
    """All (probability, transmitted dense vector) outcomes for worker i."""
    shard = est.shards[i]
    if shard.noise_sigma > 0:
        raise ValueError("exact enumeration needs noiseless workers")
    if isinstance(est, QsgdaEstimator):
        locals_ = [(1.0, shard.local_mean(x))]
    elif isinstance(est, VrDianaEstimator):
        vx = shard.operator.eval_components(x)
        vw = shard.operator.eval_components(est.w_anchor[i])
        locals_ = [(1.0 / shard.size, vx[j] - vw[j] + est.f_anchor[i])
                   for j in range(shard.size)]
    else:  # DianaEstimator
        locals_ = [(1.0, shard.local_mean(x))]
    shift = est.h_i[i] if isinstance(est, (DianaEstimator, VrDianaEstimator)) else None
    for pl, gi in locals_:
        payload = gi if shift is None else gi - shift
        for pq, qv in enumerate_compressions(est.quantizer, payload):
            yield pl * pq, qv


def _enumerate_distributed(est: DistributedEstimator, x: np.ndarray):
    per_worker = [list(_worker_messages(est, i, x)) for i in range(est.n_workers)]
    base = est.h if isinstance(est, (DianaEstimator, VrDianaEstimator)) else 0.0
    for combo in itertools.product(*per_worker):
        prob = 1.0
        g = np.zeros(est.dim) + base
        for w, (p, qv) in zip(est.weights, combo):
            prob *= p
            g = g + w * qv
        yield prob, g


def exact_mean(est: Estimator, x: np.ndarray) -> np.ndarray:
    total = None
    for p, g in _enumerate_gradients(est, x):
        total = p * g if total is None else total + p * g
    return total


def exact_second_moment(est: Estimator, x: np.ndarray, g_star: np.ndarray) -> float:
    return float(sum(p * np.sum((g - g_star) ** 2) for p, g in _enumerate_gradients(est, x)))


def exact_sigma_next(est: Estimator, x: np.ndarray, x_star: np.ndarray) -> float:
    """E[sigma_{k+1}^2] conditionally on (x, state), by enumeration."""
    op = getattr(est, "op", None)
    if isinstance(est, (FullBatchEstimator, SampledEstimator, CoordinateEstimator,
                        QsgdaEstimator)):
        return 0.0
    if isinstance(est, LooplessSvrgEstimator):
        def s(y):
            diffs = op.eval_components(y) - op.eval_components(x_star)
            return float(np.mean(np.sum(diffs**2, axis=1)))
        return est.p * s(x) + (1 - est.p) * s(est.w)
    if isinstance(est, SagaEstimator):
        star = op.eval_components(x_star)
        fresh = np.sum((op.eval_components(x) - star) ** 2, axis=1)
        old = np.sum((est.table - star) ** 2, axis=1)
        sigma = float(np.mean(old))
        return sigma + float(np.sum(fresh - old)) / op.n**2
    if isinstance(est, SegaEstimator):
        f = op.eval_full(x)
        f_star = op.eval_full(x_star)
        d = len(f)
        total = 0.0
        for j in range(d):
            h_new = est.h.copy()
            h_new[j] = f[j]
            total += np.sum((h_new - f_star) ** 2)
        return float(total / d)
    if isinstance(est, DianaEstimator) and not isinstance(est, VrDianaEstimator):
        total = 0.0
        for i in range(est.n_workers):
            fi_star = est.shards[i].local_mean(x_star)
            for p, qv in _worker_messages(est, i, x):
                h_new = est.h_i[i] + est._alpha * qv
                total += p * np.sum((h_new - fi_star) ** 2)
        return float(total / est.n_workers)
    if isinstance(est, VrDianaEstimator):
        h_term = 0.0
        anchor_term = 0.0
        for i in range(est.n_workers):
            shard = est.shards[i]
            fi_star = shard.local_mean(x_star)
            for p, qv in _worker_messages(est, i, x):
                h_new = est.h_i[i] + est._alpha * qv
                h_term += p * np.sum((h_new - fi_star) ** 2)
            star = shard.operator.eval_components(x_star)
            at_x = float(np.mean(np.sum((shard.operator.eval_components(x) - star) ** 2,
                                        axis=1)))
            at_w = float(np.mean(np.sum(
                (shard.operator.eval_components(est.w_anchor[i]) - star) ** 2, axis=1)))
            anchor_term += est._p * at_x + (1 - est._p) * at_w
        return float(h_term / est.n_workers + anchor_term / est.n_workers)
    raise TypeError(f"no sigma recursion for {type(est).__name__}")


def randomize_state(est: Estimator, problem: ProblemInstance, rng: np.random.Generator,
                    center: np.ndarray, scale: float) -> None:
    """Move the estimator's anchors/shifts to random values around center."""
    d = problem.dim
    op = problem.operator

    def point():
        return center + scale * rng.standard_normal(d)

    if isinstance(est, LooplessSvrgEstimator):
        est.w = point()
        est.f_w = op.eval_full(est.w)
        est._version += 1
    elif isinstance(est, SagaEstimator):
        for j in range(op.n):
            est.table[j] = op.eval_component(j, point())
        est.table_mean = est.table.mean(axis=0)
    elif isinstance(est, SegaEstimator):
        est.h = scale * rng.standard_normal(d)
    elif isinstance(est, VrDianaEstimator):
        for i in range(est.n_workers):
            est.h_i[i] = scale * rng.standard_normal(d)
            est.w_anchor[i] = point()
            est.f_anchor[i] = est.shards[i].local_mean(est.w_anchor[i])
        est.h = est.weights @ est.h_i
        est._anchor_version += 1
    elif isinstance(est, DianaEstimator):
        for i in range(est.n_workers):
            est.h_i[i] = scale * rng.standard_normal(d)
        est.h = est.weights @ est.h_i


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_unbiasedness(est: Estimator, problem: ProblemInstance, x: np.ndarray,
                       mode: str = "exact", trials: int = 100_000,
                       seed: int = 0, tol: float = 1e-10) -> CheckReport:
    """E[g | x] = F(x), exactly or within a 3-standard-error band.

    The estimator must already be reset() against the problem; the check is
    conditional on its current state.
    """
    f = problem.operator.eval_full(x)
    if mode == "exact":
        margin = float(np.linalg.norm(exact_mean(est, x) - f))
        return _report(f"unbiasedness[{est.name}]", "exact", 1, margin, tol)
    rng = np.random.Generator(np.random.PCG64(seed))
    acc = np.zeros_like(f)
    acc_sq = np.zeros_like(f)
    for _ in range(trials):
        g = est.sample(x, rng).g
        acc += g
        acc_sq += g**2
    mean = acc / trials
    var = np.maximum(acc_sq / trials - mean**2, 0.0)
    se = np.sqrt(var / trials)
    worst = float(np.max(np.abs(mean - f) - 3.0 * se))
    return _report(f"unbiasedness[{est.name}]", "monte_carlo", trials, worst, 0.0,
                   max_abs_diff=float(np.max(np.abs(mean - f))))


def sample_check_points(problem: ProblemInstance, count: int, rng: np.random.Generator,
                        far_every: int = 10) -> list[np.ndarray]:
    """Gaussian ball around x* with a sprinkling of far points."""
    x_star = problem.reference_solution()
    scale = 1.0 + float(np.linalg.norm(x_star)) / max(problem.dim, 1)
    pts = []
    for t in range(count):
        s = scale * (10.0 if t % far_every == far_every - 1 else 1.0)
        pts.append(x_star + s * rng.standard_normal(problem.dim))
    return pts


def check_key_assumption(est: Estimator, problem: ProblemInstance, tp: TheoryParams,
                         points: int = 100, seed: int = 0, tol: float = 1e-8,
                         state_scale: float | None = None) -> CheckReport:
    """Both certified inequalities on sampled (x, state) pairs, exact enumeration.

    Anchors/shifts are re-randomized around x* for every sampled point; the
    estimator must already be reset() against the problem.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    x_star = problem.reference_solution()
    g_star = problem.operator.eval_full(x_star)
    worst = -math.inf
    has_sigma = tp.B > 0 or isinstance(est, (LooplessSvrgEstimator, SagaEstimator,
                                             SegaEstimator, DianaEstimator))
    xs = sample_check_points(problem, points, rng)
    scale = state_scale if state_scale is not None else 1.0
    for x in xs:
        randomize_state(est, problem, rng, x_star, scale)
        inner = float((problem.operator.eval_full(x) - g_star) @ (x - x_star))
        sigma = est.sigma_sq(x_star)
        lhs1 = exact_second_moment(est, x, g_star)
        rhs1 = 2 * tp.A * inner + tp.B * sigma + tp.D1
        worst = max(worst, lhs1 - rhs1)
        if has_sigma:
            lhs2 = exact_sigma_next(est, x, x_star)
            rhs2 = 2 * tp.C * inner + (1 - tp.rho) * sigma + tp.D2
            worst = max(worst, lhs2 - rhs2)
    return _report(f"key_assumption[{est.name}]", "exact", len(xs), worst, tol,
                   checked_recursion=has_sigma)


def check_operator_conditions(problem: ProblemInstance, trials: int = 10_000,
                              seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """Random-point verification of the certified mu, ell, ell_hat constants."""
    rng = np.random.Generator(np.random.PCG64(seed))
    c = problem.constants
    op = problem.operator
    x_star = problem.reference_solution()
    f_star = op.eval_full(x_star)
    comp_star = op.eval_components(x_star)
    worst = -math.inf
    for _ in range(trials):
        x = x_star + rng.standard_normal(problem.dim) * rng.choice([0.1, 1.0, 10.0])
        z = x - x_star
        df = op.eval_full(x) - f_star
        inner = float(df @ z)
        rel = 1.0 + float(z @ z)
        worst = max(worst, (c.mu * float(z @ z) - inner) / rel)
        worst = max(worst, (float(df @ df) - c.ell * inner) / rel)
        avg = float(np.mean(np.sum((op.eval_components(x) - comp_star) ** 2, axis=1)))
        worst = max(worst, (avg - c.ell_hat * inner) / rel)
    return _report("operator_conditions", "monte_carlo", trials, worst, tol)


def check_quantizer(q, d: int, mode: str = "exact", trials: int = 100_000,
                    seed: int = 0, tol: float = 1e-12) -> CheckReport:
    """E[Q(x)] = x and E||Q(x) - x||^2 = omega ||x||^2 (tight for randk)."""
    from sgdalab.compression import compress, omega

    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal(d)
    om = omega(q, d)
    if mode == "exact":
        mean = np.zeros(d)
        second = 0.0
        for p, qv in enumerate_compressions(q, x):
            mean += p * qv
            second += p * float(np.sum((qv - x) ** 2))
        worst = max(float(np.linalg.norm(mean - x)),
                    abs(second - om * float(x @ x)))
        return _report(f"quantizer[{q.kind}]", "exact", 1, worst, tol)
    acc = np.zeros(d)
    acc2 = 0.0
    for _ in range(trials):
        qv = compress(q, x, rng).dense()
        acc += qv
        acc2 += float(np.sum((qv - x) ** 2))
    mean = acc / trials
    second = acc2 / trials
    se = 3.0 * om * float(x @ x) / math.sqrt(trials)  # crude band
    worst = max(float(np.max(np.abs(mean - x))) - se,
                abs(second - om * float(x @ x)) - 3 * se)
    return _report(f"quantizer[{q.kind}]", "monte_carlo", trials, worst, 0.0)


def toy_problem(n: int = 4, d: int = 3, seed: int = 3, regularized: bool = False,
                mu_min: float = 1.0) -> ProblemInstance:
    """Small instance with enumerable estimator randomness."""
    from sgdalab.problem import (
        GeneratorConfig,
        ProblemInstance,
        Regularizer,
        generate_quadratic_game,
    )

    cfg = GeneratorConfig(n=n, d=d, seed=seed, mu_min=mu_min,
                          sym_scale=0.5, skew_scale=0.5, offset_scale=4.0)
    op = generate_quadratic_game(cfg)
    reg = Regularizer("l1_box", lam=0.1, radius=2.0) if regularized else Regularizer()
    return ProblemInstance(op, reg, cfg)


def estimator_battery(problem: ProblemInstance, x0: np.ndarray | None = None):
    """Every estimator kind on enumerable settings, reset and ready for checks."""
    from sgdalab.compression import Quantizer
    from sgdalab.sampling import SamplingScheme

    n = problem.n
    x0 = np.zeros(problem.dim) if x0 is None else x0
    randk = Quantizer("randk", k=1)
    battery = [
        ("full_batch", FullBatchEstimator()),
        ("sgda_uniform_b1", SampledEstimator(SamplingScheme.uniform(1))),
        ("sgda_uniform_b2", SampledEstimator(SamplingScheme.uniform(2))),
        ("sgda_wo_replacement_b2",
         SampledEstimator(SamplingScheme.without_replacement(min(2, n)))),
        ("sgda_importance_b1",
         SampledEstimator(SamplingScheme.importance(problem.constants.ell_i, 1))),
        ("lsvrg", LooplessSvrgEstimator(p=1.0 / n)),
        ("saga", SagaEstimator()),
        ("coord", CoordinateEstimator()),
        ("sega", SegaEstimator()),
        ("qsgda_randk", QsgdaEstimator(2, randk)),
        ("diana_randk", DianaEstimator(2, randk)),
        ("vr_diana_randk", VrDianaEstimator(2, randk)),
    ]
    for _, est in battery:
        est.reset(problem, x0)
    return battery


def standard_suite(problem: ProblemInstance | None = None, points: int = 50,
                   seed: int = 0) -> list[CheckReport]:
    """The default verification battery: operator conditions, quantizer moments,
    unbiasedness, and both certified inequalities for every estimator.

    The exact estimator battery needs enumerable randomness; for user problems
    beyond toy size (n > 8 or d > 6) only the operator-condition and
    Monte-Carlo unbiasedness checks run.
    """
    from sgdalab.compression import Quantizer
    from sgdalab.sampling import SamplingScheme

    reports = []
    for regularized in (False, True):
        p = problem if problem is not None else toy_problem(regularized=regularized)
        tag = "l1box" if regularized else "plain"
        rep = check_operator_conditions(p, trials=1000, seed=seed)
        rep.name += f"[{tag}]"
        reports.append(rep)
        rng = np.random.Generator(np.random.PCG64(seed + 1))
        x = p.reference_solution() + rng.standard_normal(p.dim)
        if p.n > 8 or p.dim > 6:
            est = SampledEstimator(SamplingScheme.uniform(1))
            est.reset(p, x)
            rep = check_unbiasedness(est, p, x, mode="monte_carlo", trials=20_000,
                                     seed=seed + 3)
            rep.name = f"unbiasedness[sgda_uniform_b1][{tag}]"
            reports.append(rep)
        else:
            for name, est in estimator_battery(p):
                if p.n % 2 and est.name in ("qsgda", "diana", "vr_diana"):
                    continue  # theory constants need balanced shards
                rep = check_unbiasedness(est, p, x, mode="exact", tol=1e-12)
                rep.name = f"unbiasedness[{name}][{tag}]"
                reports.append(rep)
                rep = check_key_assumption(est, p, est.theory_params(p),
                                           points=points, seed=seed + 2)
                rep.name = f"key_assumption[{name}][{tag}]"
                reports.append(rep)
        if problem is not None:
            break
    for d, k in ((4, 2), (8, 3)):
        reports.append(check_quantizer(Quantizer("randk", k=k), d))
    reports.append(check_quantizer(Quantizer("identity"), 6))
    return reports


def fit_linear_rate(k: np.ndarray, dist_sq: np.ndarray,
                    window: tuple[int, int] | None = None) -> tuple[float, float]:
    """Per-iteration contraction factor from a least-squares fit of log(dist_sq)."""
    k = np.asarray(k, dtype=float)
    y = np.asarray(dist_sq, dtype=float)
    if window is not None:
        k, y = k[window[0]:window[1]], y[window[0]:window[1]]
    if len(k) < 2:
        raise ValueError("need at least two rows to fit a rate")
    if np.any(y <= 0):
        raise ValueError("dist_sq is nonpositive in the window (saturated)")
    logs = np.log(y)
    slope, intercept = np.polyfit(k, logs, 1)
    pred = slope * k + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), r_sq
