"""The generic proximal descent-ascent loop, schedules, metrics, and traces.

One update is x <- prox_{gamma R}(x - gamma g) with g from an estimator.
Traces record squared distance to the reference solution, the Lyapunov value
dist^2 + M gamma^2 sigma^2, cumulative oracle calls and uplink bits, and
optionally the restricted gap at the running average iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from sgdalab.estimators import Estimator
from sgdalab.problem import ProblemInstance, Regularizer, prox
from sgdalab.theory import TheoryParams

TRACE_COLUMNS = ("k", "gamma", "dist_sq", "lyapunov", "sigma_sq",
                 "oracle_calls", "uplink_bits", "gap")


# ---------------------------------------------------------------------------
# Step-size schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantStepsize:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def at(self, k: int) -> float:
        if k < 0:
            raise ValueError("iteration index must be nonnegative")
        return self.gamma


@dataclass(frozen=True)
class DecreasingStepsize:
    """Three-branch horizon-aware schedule: constant 1/h for the first half,
    then O(1/k) decay; continuous at the switch point."""

    h: float
    a: float
    K: int

    def __post_init__(self):
        if not (self.h >= self.a > 0):
            raise ValueError("need h >= a > 0")
        if self.K < 1:
            raise ValueError("horizon K must be >= 1")

    def at(self, k: int) -> float:
        if not 0 <= k < self.K:
            raise ValueError(f"iteration {k} outside [0, {self.K})")
        if self.K <= self.h / self.a:
            return 1.0 / self.h
        k0 = math.ceil(self.K / 2)
        if k < k0:
            return 1.0 / self.h
        kappa = 2.0 * self.h / self.a
        return 2.0 / (self.a * (kappa + k - k0))


def stepsize_at(schedule, k: int) -> float:
    return schedule.at(k)


def decreasing_from_theory(tp: TheoryParams, mu: float, K: int) -> DecreasingStepsize:
    """h = max{2(A + 2BC/rho), 2 mu / rho} with modulus a = mu."""
    h = max(2.0 * (tp.A + tp.C * tp.M), 2.0 * mu / tp.rho)
    return DecreasingStepsize(h=h, a=mu, K=K)


def theory_stepsize(tp: TheoryParams, mu: float) -> float:
    return tp.stepsize_cap(mu)


# ---------------------------------------------------------------------------
# Single update and envelope
# ---------------------------------------------------------------------------

def prox_step(x: np.ndarray, g: np.ndarray, gamma: float, reg: Regularizer) -> np.ndarray:
    if x.shape != g.shape:
        raise ValueError("x and g must have the same shape")
    return prox(reg, gamma, x - gamma * g)


def lyapunov(dist_sq: float, sigma_sq: float, M: float, gamma: float) -> float:
    return dist_sq + M * gamma**2 * sigma_sq


def theoretical_envelope(tp: TheoryParams, mu: float, gamma: float, v0: float,
                         k) -> np.ndarray | float:
    """Upper bound (1 - r)^k V0 + gamma^2 (D1 + M D2) / r with
    r = min{gamma mu, rho - B/M}; gamma must respect the step cap."""
    cap = tp.stepsize_cap(mu)
    if gamma > cap * (1 + 1e-12):
        raise ValueError(f"gamma = {gamma:g} violates the step cap {cap:g}")
    r = tp.contraction(gamma, mu)
    if r <= 0:
        raise ValueError("contraction factor is zero: need mu > 0 and rho > B/M")
    noise = gamma**2 * (tp.D1 + tp.M * tp.D2) / r
    return (1.0 - r) ** np.asarray(k) * v0 + noise


# ---------------------------------------------------------------------------
# Restricted gap function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxSet:
    """The compact set for the gap metric: an l_inf ball around center."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(x - self.center)) <= self.radius + tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.center - self.radius, self.center + self.radius)


@dataclass
class GapResult:
    value: float
    converged: bool
    grad_map_norm: float
    iterations: int


def restricted_gap(problem: ProblemInstance, box: BoxSet, z: np.ndarray,
                   tol: float = 1e-9, budget: int = 20_000) -> GapResult:
    """max over u in box (intersected with the regularizer's box) of
    <F(u), z - u> + R(z) - R(u), by accelerated proximal ascent with
    multi-start.  The returned value is never below the best evaluated point,
    so it is a certified lower bound on the true maximum.
    """
    op, reg = problem.operator, problem.regularizer
    x_star = problem.reference_solution()
    if not box.contains(x_star):
        raise ValueError("gap box must contain the reference solution")
    z = np.asarray(z, dtype=np.float64)
    rz = reg.value(z)
    if math.isinf(rz):
        raise ValueError("gap is evaluated at infeasible z (outside dom R)")

    a, b = op.mean_matrix, op.mean_offset
    sym2 = a + a.T
    lo = np.maximum(box.center - box.radius, -reg.radius)
    hi = np.minimum(box.center + box.radius, reg.radius)
    if np.any(lo > hi):
        raise ValueError("gap box does not intersect the regularizer's box")
    lip = float(scipy.linalg.eigh(sym2, eigvals_only=True)[-1])
    step = 1.0 / max(lip, 1e-30)
    atz = a.T @ z

    def phi(u):
        # <F(u), z - u> + R(z) - R(u)
        return float((a @ u + b) @ (z - u)) + rz - reg.lam * float(np.sum(np.abs(u)))

    def grad(u):
        return atz - sym2 @ u - b

    def prox_point(u):
        # prox of step * (lam |.|_1 + indicator of [lo, hi]) at u
        s = np.sign(u) * np.maximum(np.abs(u) - step * reg.lam, 0.0)
        return np.clip(s, lo, hi)

    d = problem.dim
    starts = [box.center.copy(), np.clip(z, lo, hi), np.clip(x_star, lo, hi)]
    for j in range(d):
        e = box.center.copy()
        e[j] = hi[j]
        starts.append(np.clip(e, lo, hi))
        e = box.center.copy()
        e[j] = lo[j]
        starts.append(np.clip(e, lo, hi))

    best_val = -math.inf
    best_gm = math.inf
    converged = False
    total_iters = 0
    per_start = max(budget // len(starts), 50)
    for u0 in starts:
        u = u0.copy()
        best_val = max(best_val, phi(u))
        y = u.copy()
        t_acc = 1.0
        prev_val = -math.inf
        for it in range(per_start):
            total_iters += 1
            u_new = prox_point(y + step * grad(y))
            gm = float(np.linalg.norm((u - prox_point(u + step * grad(u)))) / step)
            val = phi(u_new)
            best_val = max(best_val, val)
            if gm <= tol:
                best_gm = min(best_gm, gm)
                converged = True
                break
            if val < prev_val:  # restart the momentum on non-monotone progress
                y = u.copy()
                t_acc = 1.0
                prev_val = phi(u)
                continue
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t_acc**2)) / 2.0
            y = u_new + ((t_acc - 1.0) / t_next) * (u_new - u)
            u = u_new
            t_acc = t_next
            prev_val = val
        else:
            gm = float(np.linalg.norm((u - prox_point(u + step * grad(u)))) / step)
            best_gm = min(best_gm, gm)
    return GapResult(value=best_val, converged=converged,
                     grad_map_norm=best_gm, iterations=total_iters)


def default_gap_box(problem: ProblemInstance, x0: np.ndarray,
                    factor: float = 2.0) -> BoxSet:
    """Box of radius factor * ||x0 - x*||_inf around x*."""
    x_star = problem.reference_solution()
    radius = factor * float(np.max(np.abs(np.asarray(x0) - x_star)))
    return BoxSet(center=x_star, radius=max(radius, 1e-8))


# ---------------------------------------------------------------------------
# Run loop and traces
# ---------------------------------------------------------------------------

@dataclass
class RunTrace:
    method: str
    seed: int
    columns: dict = field(default_factory=dict)
    diverged_at: int | None = None
    meta: dict = field(default_factory=dict)

    def col(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    @property
    def rows(self) -> int:
        return len(self.columns["k"])

    def final(self, name: str) -> float:
        return self.columns[name][-1]


@dataclass
class RunOptions:
    record_every: int = 1
    record_x: bool = False
    gap_every: int = 0           # in recorded rows; 0 disables the gap metric
    gap_box: BoxSet | None = None
    gap_box_factor: float = 2.0  # default box radius: factor * ||x0 - x*||_inf
    gap_tol: float = 1e-9
    gap_budget: int = 20_000
    need_reference: bool = True  # distance/Lyapunov metrics require x*


def run(problem: ProblemInstance, estimator: Estimator, schedule, K: int, seed: int,
        x0: np.ndarray | None = None, options: RunOptions | None = None) -> RunTrace:
    """Run K proximal steps; deterministic for a fixed seed.

    Row k stores the state after k steps; the gamma column holds the step
    used at iteration k (the final row repeats the last step).  Oracle and
    bit counters accumulate every iteration regardless of record_every.
    """
    opts = options or RunOptions()
    if K < 0:
        raise ValueError("K must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = (np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=np.float64))

    x_star = problem.reference_solution() if opts.need_reference else None
    gap_box = opts.gap_box
    if opts.gap_every > 0 and gap_box is None:
        gap_box = default_gap_box(problem, x, factor=opts.gap_box_factor)

    calls = estimator.reset(problem, x)
    bits = getattr(estimator, "init_bits", 0)
    tp = estimator.theory_params(problem) if opts.need_reference else None
    m_weight = tp.M if tp is not None else 0.0

    cols = {name: [] for name in TRACE_COLUMNS}
    xs = [] if opts.record_x else None
    x_avg = np.zeros_like(x)
    rows_recorded = 0

    def record(k: int, gamma: float):
        nonlocal rows_recorded
        with np.errstate(over="ignore", invalid="ignore"):
            dist_sq = (float(np.sum((x - x_star) ** 2)) if x_star is not None
                       else math.nan)
            sigma = estimator.sigma_sq(x_star) if x_star is not None else math.nan
            lyap = (lyapunov(dist_sq, sigma, m_weight, gamma)
                    if x_star is not None else math.nan)
        gap_val = math.nan
        rows_recorded += 1
        if opts.gap_every > 0 and k > 0 and rows_recorded % opts.gap_every == 0:
            z = x_avg / k
            gap_val = restricted_gap(problem, gap_box, z,
                                     tol=opts.gap_tol, budget=opts.gap_budget).value
        cols["k"].append(k)
        cols["gamma"].append(gamma)
        cols["dist_sq"].append(dist_sq)
        cols["lyapunov"].append(lyap)
        cols["sigma_sq"].append(sigma)
        cols["oracle_calls"].append(calls)
        cols["uplink_bits"].append(bits)
        cols["gap"].append(gap_val)
        if xs is not None:
            xs.append(x.copy())

    gamma0 = schedule.at(0) if K > 0 else math.nan
    record(0, gamma0)
    trace = RunTrace(method=estimator.name, seed=seed)
    last_gamma = gamma0
    for k in range(K):
        gamma = schedule.at(k)
        last_gamma = gamma
        with np.errstate(over="ignore", invalid="ignore"):
            s = estimator.sample(x, rng)
            calls += s.oracle_calls
            bits += s.uplink_bits
            x = prox_step(x, s.g, gamma, problem.regularizer)
        if not np.all(np.isfinite(x)):
            trace.diverged_at = k + 1
            record(k + 1, gamma)
            break
        x_avg += x
        if (k + 1) % opts.record_every == 0 or k + 1 == K:
            record(k + 1, last_gamma)

    trace.columns = {name: np.array(vals) for name, vals in cols.items()}
    trace.meta = {
        "estimator_params": estimator.params(),
        "K": K,
        "record_every": opts.record_every,
    }
    if opts.gap_every > 0:
        trace.meta["gap_box_center"] = gap_box.center.tolist()
        trace.meta["gap_box_radius"] = gap_box.radius
    if xs is not None:
        trace.meta["x"] = np.stack(xs)
        trace.meta["x_final"] = xs[-1]
    return trace


# ---------------------------------------------------------------------------
# CSV persistence (17 significant digits, stable column order)
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.17g}"


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        n = trace.rows
        for r in range(n):
            f.write(",".join(_fmt(trace.columns[c][r]) for c in TRACE_COLUMNS) + "\n")


def read_trace_csv(path) -> dict:
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    cols = {}
    for i, name in enumerate(header):
        vals = [math.nan if r[i] == "" else float(r[i]) for r in rows]
        cols[name] = np.array(vals)
    return cols
