"""Single-process gradient estimators for the generic proximal loop.

Every estimator yields unbiased estimates g of F(x) and carries its own
sigma^2 diagnostic and certified TheoryParams.  Oracle cost unit: one
component evaluation F_i(x) counts as 1 call; coordinate methods count
query_cost per coordinate query (default 1, so a full evaluation equals d
queries; set query_cost=d for the conservative full-evaluation accounting).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sgdalab.problem import ProblemInstance
from sgdalab.sampling import (
    SamplingScheme,
    draw,
    estimate,
    scheme_constants,
    sigma_star_sq,
)
from sgdalab.theory import TheoryParams


@dataclass
class GradientSample:
    g: np.ndarray
    oracle_calls: int
    uplink_bits: int = 0


class Estimator:
    """Protocol: reset(problem, x0) -> init oracle calls; sample(x, rng) -> GradientSample."""

    name = "estimator"

    def reset(self, problem: ProblemInstance, x0: np.ndarray) -> int:
        raise NotImplementedError

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> GradientSample:
        raise NotImplementedError

    def sigma_sq(self, x_star: np.ndarray) -> float:
        """The estimator's sigma_k^2 diagnostic at the current state."""
        return 0.0

    def theory_params(self, problem: ProblemInstance) -> TheoryParams:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # memoized component values at x*, keyed on the array object
    def _components_at(self, x_star: np.ndarray) -> np.ndarray:
        cache = getattr(self, "_star_cache", None)
        if cache is None or cache[0] is not x_star:
            vals = self.op.eval_components(x_star)
            self._star_cache = (x_star, vals)
        return self._star_cache[1]


class FullBatchEstimator(Estimator):
    """Deterministic g = F(x); n oracle calls per step."""

    name = "full_batch"

    def reset(self, problem, x0):
        self.op = problem.operator
        return 0

    def sample(self, x, rng):
        return GradientSample(self.op.eval_full(x), self.op.n)

    def theory_params(self, problem):
        return TheoryParams(A=problem.constants.ell, B=0, C=0, rho=1, D1=0, D2=0)


class SampledEstimator(Estimator):
    """Plain sampled descent-ascent: g from one batch draw of the scheme."""

    name = "sgda"

    def __init__(self, scheme: SamplingScheme):
        self.scheme = scheme

    def reset(self, problem, x0):
        self.op = problem.operator
        self.scheme.validate(self.op.n)
        return 0

    def sample(self, x, rng):
        d = draw(self.scheme, self.op.n, rng)
        return GradientSample(estimate(self.op, d, x), len(d.indices))

    def theory_params(self, problem):
        sc = scheme_constants(self.scheme, problem.constants, problem.n)
        d1 = 2.0 * sigma_star_sq(self.scheme, problem)
        return TheoryParams(A=sc.ell_D, B=0, C=0, rho=1, D1=d1, D2=0)

    def params(self):
        return {"sampling": self.scheme.kind, "batch": self.scheme.batch}


class LooplessSvrgEstimator(Estimator):
    """g = F_j(x) - F_j(w) + F(w); the anchor w restarts to x with probability p.

    The restart coin is drawn after g is computed, so the anchor used at step
    k is always w^k.
    """

    name = "lsvrg"

    def __init__(self, p: float):
        if not 0 < p <= 1:
            raise ValueError("restart probability p must lie in (0, 1]")
        self.p = p

    def reset(self, problem, x0):
        self.op = problem.operator
        self.w = np.array(x0, dtype=np.float64)
        self.f_w = self.op.eval_full(self.w)
        self._version = 0
        self._sigma_cache = None
        return self.op.n

    def sample(self, x, rng):
        n = self.op.n
        j = int(rng.integers(n))
        g = self.op.eval_component(j, x) - self.op.eval_component(j, self.w) + self.f_w
        calls = 2
        if rng.random() < self.p:
            self.w = np.array(x, dtype=np.float64)
            self.f_w = self.op.eval_full(self.w)
            self._version += 1
            calls += n
        return GradientSample(g, calls)

    def sigma_sq(self, x_star):
        cache = self._sigma_cache
        if cache is None or cache[0] != self._version or cache[1] is not x_star:
            diffs = self.op.eval_components(self.w) - self._components_at(x_star)
            value = float(np.mean(np.sum(diffs**2, axis=1)))
            self._sigma_cache = (self._version, x_star, value)
        return self._sigma_cache[2]

    def theory_params(self, problem):
        lh = problem.constants.ell_hat
        return TheoryParams(A=lh, B=2, C=self.p * lh / 2, rho=self.p, D1=0, D2=0)

    def params(self):
        return {"p": self.p}


class SagaEstimator(Estimator):
    """Table of component values at per-slot anchors with an incremental mean.

    The running mean is recomputed exactly every n updates to bound float
    drift.
    """

    name = "saga"

    def reset(self, problem, x0):
        self.op = problem.operator
        x0 = np.asarray(x0, dtype=np.float64)
        self.table = self.op.eval_components(x0)
        self.table_mean = self.table.mean(axis=0)
        self._updates = 0
        return self.op.n

    def sample(self, x, rng):
        n = self.op.n
        j = int(rng.integers(n))
        fresh = self.op.eval_component(j, x)
        g = fresh - self.table[j] + self.table_mean
        self.table_mean = self.table_mean + (fresh - self.table[j]) / n
        self.table[j] = fresh
        self._updates += 1
        if self._updates % n == 0:
            self.table_mean = self.table.mean(axis=0)
        return GradientSample(g, 1)

    def sigma_sq(self, x_star):
        diffs = self.table - self._components_at(x_star)
        return float(np.mean(np.sum(diffs**2, axis=1)))

    def theory_params(self, problem):
        lh, n = problem.constants.ell_hat, problem.n
        return TheoryParams(A=lh, B=2, C=lh / (2 * n), rho=1.0 / n, D1=0, D2=0)


class CoordinateEstimator(Estimator):
    """g = d * e_j * [F(x)]_j with j uniform over coordinates."""

    name = "coord"

    def __init__(self, query_cost: int = 1):
        self.query_cost = query_cost

    def reset(self, problem, x0):
        self.op = problem.operator
        self.dim = problem.dim
        return 0

    def sample(self, x, rng):
        j = int(rng.integers(self.dim))
        g = np.zeros(self.dim)
        g[j] = self.dim * self.op.eval_coordinate(x, j)
        return GradientSample(g, self.query_cost)

    def theory_params(self, problem):
        d = problem.dim
        f_star = problem.operator.eval_full(problem.reference_solution())
        d1 = 2.0 * d * float(np.sum(f_star**2))
        return TheoryParams(A=d * problem.constants.ell, B=0, C=0, rho=1, D1=d1, D2=0)

    def params(self):
        return {"query_cost": self.query_cost}


class SegaEstimator(Estimator):
    """Shifted coordinate estimator: g = d e_j ([F(x)]_j - h_j) + h, then h_j <- [F(x)]_j."""

    name = "sega"

    def __init__(self, query_cost: int = 1):
        self.query_cost = query_cost

    def reset(self, problem, x0):
        self.op = problem.operator
        self.dim = problem.dim
        self.h = np.zeros(self.dim)
        return 0

    def sample(self, x, rng):
        j = int(rng.integers(self.dim))
        c = self.op.eval_coordinate(x, j)
        g = self.h.copy()
        g[j] += self.dim * (c - self.h[j])
        self.h[j] = c
        return GradientSample(g, self.query_cost)

    def sigma_sq(self, x_star):
        f_star = self._full_at(x_star)
        return float(np.sum((self.h - f_star) ** 2))

    def _full_at(self, x_star):
        cache = getattr(self, "_full_cache", None)
        if cache is None or cache[0] is not x_star:
            self._full_cache = (x_star, self.op.eval_full(x_star))
        return self._full_cache[1]

    def theory_params(self, problem):
        d, ell = problem.dim, problem.constants.ell
        return TheoryParams(A=d * ell, B=2 * d, C=ell / (2 * d), rho=1.0 / d, D1=0, D2=0)

    def params(self):
        return {"query_cost": self.query_cost}
