"""Simulated n-worker parameter-server estimators with compressed uplinks.

Workers hold contiguous shards of the finite sum; each round they send one
compressed message to the server.  Aggregation weights each worker by its
shard size, which reduces to the plain mean for balanced shards.  All methods
produce unbiased estimates of F(x) and track oracle calls plus uplink bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sgdalab.compression import Quantizer, compress, encoded_bits, omega
from sgdalab.estimators import Estimator, GradientSample
from sgdalab.problem import FiniteSumOperator, ProblemInstance, averaged_cocoercivity_constant
from sgdalab.theory import TheoryParams


@dataclass
class WorkerShard:
    operator: FiniteSumOperator
    noise_sigma: float = 0.0

    @property
    def size(self) -> int:
        return self.operator.n

    def local_mean(self, x: np.ndarray) -> np.ndarray:
        return self.operator.eval_full(x)


def partition(op: FiniteSumOperator, n_workers: int, noise_sigma=0.0) -> list[WorkerShard]:
    """Split components contiguously; the remainder goes to the last worker."""
    if not 1 <= n_workers <= op.n:
        raise ValueError(f"need 1 <= n_workers <= {op.n}, got {n_workers}")
    sigmas = np.broadcast_to(np.asarray(noise_sigma, dtype=np.float64), (n_workers,))
    if np.any(sigmas < 0):
        raise ValueError("noise sigmas must be nonnegative")
    base = op.n // n_workers
    shards = []
    start = 0
    for i in range(n_workers):
        size = base + (op.n - base * n_workers if i == n_workers - 1 else 0)
        shards.append(WorkerShard(op.subset_mean(range(start, start + size)),
                                  float(sigmas[i])))
        start += size
    return shards


def local_gradient(shard: WorkerShard, x: np.ndarray, mode: str,
                   rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Worker-local estimate of F_i(x): exact mean, or mean plus isotropic
    Gaussian noise with total variance noise_sigma^2."""
    if mode == "exact":
        return shard.local_mean(x), shard.size
    if mode == "noisy":
        g = shard.local_mean(x)
        if shard.noise_sigma > 0:
            g = g + shard.noise_sigma * rng.standard_normal(len(g)) / np.sqrt(len(g))
        return g, shard.size
    raise ValueError(f"unknown local gradient mode {mode!r}")


def zeta_star_sq(shards: list[WorkerShard], x_star: np.ndarray) -> float:
    """Worker heterogeneity at the solution: mean of ||F_i(x*)||^2."""
    return float(np.mean([np.sum(s.local_mean(x_star) ** 2) for s in shards]))


def _require_balanced(shards: list[WorkerShard], what: str) -> int:
    sizes = {s.size for s in shards}
    if len(sizes) != 1:
        raise ValueError(f"{what} assumes balanced shards, got sizes "
                         f"{sorted(s.size for s in shards)}")
    return sizes.pop()


def worker_averaged_cocoercivity(shards: list[WorkerShard],
                                 mean_matrix: np.ndarray) -> float:
    """Averaged star-cocoercivity constant over the worker-level operators."""
    worker_means = np.stack([s.operator.mean_matrix for s in shards])
    return averaged_cocoercivity_constant(worker_means, mean_matrix)


class DistributedEstimator(Estimator):
    local_mode = "exact"

    def __init__(self, n_workers: int, quantizer: Quantizer, noise_sigma=0.0,
                 value_bits: int = 64):
        self.n_workers = n_workers
        self.quantizer = quantizer
        self.noise_sigma = noise_sigma
        self.value_bits = value_bits

    def _ensure_bound(self, problem: ProblemInstance) -> None:
        if getattr(self, "problem", None) is not problem:
            self._bind(problem)

    def _bind(self, problem: ProblemInstance) -> None:
        self.problem = problem
        self.op = problem.operator
        self.dim = problem.dim
        self.shards = partition(self.op, self.n_workers, self.noise_sigma)
        self.weights = np.array([s.size / self.op.n for s in self.shards])
        self._local_mode = ("noisy" if any(s.noise_sigma > 0 for s in self.shards)
                            else "exact")

    def _omega(self) -> float:
        return omega(self.quantizer, self.dim)

    def _sigma_bar_sq(self) -> float:
        return float(np.mean([s.noise_sigma**2 for s in self.shards]))

    def _zeta_star_sq(self) -> float:
        return zeta_star_sq(self.shards, self.problem.reference_solution())

    def _worker_stars(self, x_star: np.ndarray) -> np.ndarray:
        cache = getattr(self, "_wstar_cache", None)
        if cache is None or cache[0] is not x_star:
            vals = np.stack([s.local_mean(x_star) for s in self.shards])
            self._wstar_cache = (x_star, vals)
        return self._wstar_cache[1]

    def params(self) -> dict:
        return {
            "workers": self.n_workers,
            "quantizer": self.quantizer.kind,
            "k": self.quantizer.k,
            "noise_sigma": self.noise_sigma,
        }


class QsgdaEstimator(DistributedEstimator):
    """Server averages independently compressed worker gradients."""

    name = "qsgda"

    def reset(self, problem, x0):
        self._bind(problem)
        return 0

    def sample(self, x, rng):
        g = np.zeros(self.dim)
        calls = bits = 0
        for w, shard in zip(self.weights, self.shards):
            gi, c = local_gradient(shard, x, self._local_mode, rng)
            calls += c
            cv = compress(self.quantizer, gi, rng)
            bits += encoded_bits(cv, self.value_bits)
            g += w * cv.dense()
        return GradientSample(g, calls, bits)

    def theory_params(self, problem):
        self._ensure_bound(problem)
        _require_balanced(self.shards, "qsgda theory constants")
        c = problem.constants
        nw, om = self.n_workers, self._omega()
        ell_hat_w = worker_averaged_cocoercivity(self.shards, self.op.mean_matrix)
        a = 1.5 * c.ell + 4.5 * om * ell_hat_w / nw
        d1 = (3 * (1 + 3 * om) * self._sigma_bar_sq() + 9 * om * self._zeta_star_sq()) / nw
        return TheoryParams(A=a, B=0, C=0, rho=1, D1=d1, D2=0)


class DianaEstimator(DistributedEstimator):
    """Workers compress the innovation g_i - h_i; shifts learn at rate alpha."""

    name = "diana"

    def __init__(self, n_workers, quantizer, alpha: float | None = None,
                 noise_sigma=0.0, value_bits: int = 64, h0: str = "zeros"):
        super().__init__(n_workers, quantizer, noise_sigma, value_bits)
        self.alpha = alpha
        if h0 not in ("zeros", "local"):
            raise ValueError("h0 must be 'zeros' or 'local'")
        self.h0 = h0

    def _resolve_alpha(self) -> float:
        alpha = self.alpha if self.alpha is not None else 1.0 / (1.0 + self._omega())
        if not 0 < alpha <= 1.0 / (1.0 + self._omega()) + 1e-12:
            raise ValueError(f"alpha = {alpha:g} outside (0, 1/(1+omega)]")
        return alpha

    def reset(self, problem, x0):
        self._bind(problem)
        self._alpha = self._resolve_alpha()
        calls = 0
        if self.h0 == "local":
            self.h_i = np.stack([s.local_mean(x0) for s in self.shards])
            calls = self.op.n
            self.init_bits = self.n_workers * self.dim * self.value_bits
        else:
            self.h_i = np.zeros((self.n_workers, self.dim))
            self.init_bits = 0
        self.h = self.weights @ self.h_i
        return calls

    def sample(self, x, rng):
        agg = np.zeros(self.dim)
        calls = bits = 0
        for i, (w, shard) in enumerate(zip(self.weights, self.shards)):
            gi, c = local_gradient(shard, x, self._local_mode, rng)
            calls += c
            cv = compress(self.quantizer, gi - self.h_i[i], rng)
            bits += encoded_bits(cv, self.value_bits)
            qd = cv.dense()
            agg += w * qd
            self.h_i[i] += self._alpha * qd
        g = self.h + agg
        self.h = self.weights @ self.h_i
        return GradientSample(g, calls, bits)

    def sigma_sq(self, x_star):
        diffs = self.h_i - self._worker_stars(x_star)
        return float(np.mean(np.sum(diffs**2, axis=1)))

    def theory_params(self, problem):
        self._ensure_bound(problem)
        _require_balanced(self.shards, "diana theory constants")
        nw, om = self.n_workers, self._omega()
        alpha = self._resolve_alpha()
        ell_hat_w = worker_averaged_cocoercivity(self.shards, self.op.mean_matrix)
        sbar = self._sigma_bar_sq()
        return TheoryParams(
            A=(0.5 + om / nw) * ell_hat_w,
            B=2 * om / nw,
            C=alpha * ell_hat_w / 2,
            rho=alpha,
            D1=(1 + om) * sbar / nw,
            D2=alpha * sbar,
        )


class VrDianaEstimator(DistributedEstimator):
    """Shifted compression on top of per-worker loopless variance reduction.

    Worker i samples one shard component j, forms
    g_i = F_ij(x) - F_ij(w_i) + F_i(w_i), and restarts its anchor w_i <- x
    with probability p (independent coins by default, one shared coin
    optionally).  Gaussian local noise is not supported here.
    """

    name = "vr_diana"

    def __init__(self, n_workers, quantizer, alpha: float | None = None,
                 p: float | None = None, value_bits: int = 64, h0: str = "zeros",
                 shared_restart: bool = False):
        super().__init__(n_workers, quantizer, 0.0, value_bits)
        self.alpha = alpha
        self.p = p
        if h0 not in ("zeros", "local"):
            raise ValueError("h0 must be 'zeros' or 'local'")
        self.h0 = h0
        self.shared_restart = shared_restart

    def _resolve_rates(self) -> None:
        m = max(s.size for s in self.shards)
        self._p = self.p if self.p is not None else 1.0 / m
        if not 0 < self._p <= 1:
            raise ValueError("restart probability p must lie in (0, 1]")
        om = self._omega()
        cap = min(self._p / 3, 1.0 / (1.0 + om))
        self._alpha = self.alpha if self.alpha is not None else cap
        if not 0 < self._alpha <= cap + 1e-12:
            raise ValueError(f"alpha = {self._alpha:g} outside (0, min(p/3, 1/(1+omega))]")

    def reset(self, problem, x0):
        self._bind(problem)
        x0 = np.asarray(x0, dtype=np.float64)
        self._resolve_rates()
        self.w_anchor = np.tile(x0, (self.n_workers, 1))
        self.f_anchor = np.stack([s.local_mean(x0) for s in self.shards])
        self._anchor_version = 0
        self._sigma_anchor_cache = None
        calls = self.op.n
        if self.h0 == "local":
            self.h_i = self.f_anchor.copy()
            self.init_bits = self.n_workers * self.dim * self.value_bits
        else:
            self.h_i = np.zeros((self.n_workers, self.dim))
            self.init_bits = 0
        self.h = self.weights @ self.h_i
        return calls

    def sample(self, x, rng):
        agg = np.zeros(self.dim)
        calls = bits = 0
        shared_coin = rng.random() if self.shared_restart else None
        for i, (w, shard) in enumerate(zip(self.weights, self.shards)):
            j = int(rng.integers(shard.size))
            gi = (shard.operator.eval_component(j, x)
                  - shard.operator.eval_component(j, self.w_anchor[i])
                  + self.f_anchor[i])
            calls += 2
            coin = shared_coin if shared_coin is not None else rng.random()
            if coin < self._p:
                self.w_anchor[i] = x
                self.f_anchor[i] = shard.local_mean(x)
                calls += shard.size
                self._anchor_version += 1
            cv = compress(self.quantizer, gi - self.h_i[i], rng)
            bits += encoded_bits(cv, self.value_bits)
            qd = cv.dense()
            agg += w * qd
            self.h_i[i] += self._alpha * qd
        g = self.h + agg
        self.h = self.weights @ self.h_i
        return GradientSample(g, calls, bits)

    def sigma_sq(self, x_star):
        shift = self.h_i - self._worker_stars(x_star)
        h_term = float(np.mean(np.sum(shift**2, axis=1)))
        cache = self._sigma_anchor_cache
        if cache is None or cache[0] != self._anchor_version or cache[1] is not x_star:
            per_worker = []
            for i, shard in enumerate(self.shards):
                diffs = (shard.operator.eval_components(self.w_anchor[i])
                         - shard.operator.eval_components(x_star))
                per_worker.append(float(np.mean(np.sum(diffs**2, axis=1))))
            self._sigma_anchor_cache = (self._anchor_version, x_star,
                                        float(np.mean(per_worker)))
        return h_term + self._sigma_anchor_cache[2]

    def theory_params(self, problem):
        self._ensure_bound(problem)
        self._resolve_rates()
        _require_balanced(self.shards, "vr_diana theory constants")
        c = problem.constants
        nw, om = self.n_workers, self._omega()
        alpha, p = self._alpha, self._p
        ell_hat_w = worker_averaged_cocoercivity(self.shards, self.op.mean_matrix)
        ell_tilde = c.ell_hat  # double mean over shard components = component mean
        return TheoryParams(
            A=c.ell / 2 + ell_tilde / nw + om * (ell_hat_w + ell_tilde) / nw,
            B=2 * (om + 1) / nw,
            C=p * ell_tilde / 2 + alpha * (ell_tilde + ell_hat_w),
            rho=alpha,
            D1=0,
            D2=0,
        )

    def params(self):
        out = super().params()
        out.update({"p": self.p, "alpha": self.alpha, "shared_restart": self.shared_restart})
        return out
