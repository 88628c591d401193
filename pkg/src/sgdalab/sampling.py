"""Sampling schemes for the finite-sum reformulation and their theory constants.

A draw produces indices and per-index weights xi_i with E[xi_i] = 1, so that
g = (1/n) sum_{drawn i} w_i F_i(x) is an unbiased estimate of F(x).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from sgdalab.problem import ProblemConstants, ProblemInstance

KINDS = ("uniform", "without_replacement", "importance")


@dataclass(frozen=True)
class SamplingScheme:
    kind: str
    batch: int = 1
    probs: np.ndarray | None = None  # importance sampling only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.kind == "importance":
            if self.probs is None:
                raise ValueError("importance sampling needs probabilities")
            p = np.asarray(self.probs, dtype=np.float64)
            if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("importance probabilities must be positive and sum to 1")
            object.__setattr__(self, "probs", p)

    @staticmethod
    def uniform(batch: int = 1) -> "SamplingScheme":
        return SamplingScheme("uniform", batch)

    @staticmethod
    def without_replacement(batch: int = 1) -> "SamplingScheme":
        return SamplingScheme("without_replacement", batch)

    @staticmethod
    def importance(ell_i: np.ndarray, batch: int = 1) -> "SamplingScheme":
        """P(i) = ell_i / (n * mean ell); the classical importance sampling."""
        ell_i = np.asarray(ell_i, dtype=np.float64)
        return SamplingScheme("importance", batch, probs=ell_i / ell_i.sum())

    def validate(self, n: int) -> None:
        if self.kind == "without_replacement" and self.batch > n:
            raise ValueError(f"batch {self.batch} exceeds n = {n} without replacement")
        if self.kind == "importance" and len(self.probs) != n:
            raise ValueError("importance probabilities must have length n")


@dataclass(frozen=True)
class SamplingDraw:
    indices: np.ndarray
    weights: np.ndarray


def draw(scheme: SamplingScheme, n: int, rng: np.random.Generator) -> SamplingDraw:
    """One batch draw; weights are the reformulation weights xi_i per drawn index."""
    scheme.validate(n)
    b = scheme.batch
    if scheme.kind == "uniform":
        idx = rng.integers(0, n, size=b)
        w = np.full(b, n / b)
    elif scheme.kind == "without_replacement":
        idx = rng.choice(n, size=b, replace=False)
        w = np.full(b, n / b)
    else:
        idx = rng.choice(n, size=b, p=scheme.probs)
        w = 1.0 / (b * scheme.probs[idx])
    return SamplingDraw(indices=idx, weights=w)


def estimate(op, d: SamplingDraw, x: np.ndarray) -> np.ndarray:
    """g = (1/n) sum of weighted drawn components, unbiased for F(x)."""
    vals = op.matrices[d.indices] @ x + op.offsets[d.indices]
    return (d.weights @ vals) / op.n


def enumerate_draws(scheme: SamplingScheme, n: int):
    """All (probability, indices, weights) outcomes; for exact checks on toy sizes."""
    scheme.validate(n)
    b = scheme.batch
    if scheme.kind == "uniform":
        for tup in itertools.product(range(n), repeat=b):
            idx = np.array(tup)
            yield (1.0 / n) ** b, idx, np.full(b, n / b)
    elif scheme.kind == "without_replacement":
        total = math.comb(n, b)
        for tup in itertools.combinations(range(n), b):
            idx = np.array(tup)
            yield 1.0 / total, idx, np.full(b, n / b)
    else:
        for tup in itertools.product(range(n), repeat=b):
            idx = np.array(tup)
            p = float(np.prod(scheme.probs[idx]))
            yield p, idx, 1.0 / (b * scheme.probs[idx])


@dataclass(frozen=True)
class SchemeConstants:
    ell_D: float
    sigma_scale: float


def scheme_constants(scheme: SamplingScheme, constants: ProblemConstants,
                     n: int) -> SchemeConstants:
    """Expected-cocoercivity constant and the variance scale factor for the scheme.

    The without-replacement constants are derived for the unregularized
    problem; they are applied unchanged when a regularizer is present.
    """
    scheme.validate(n)
    b = scheme.batch
    if scheme.kind == "uniform":
        return SchemeConstants(ell_D=constants.ell_max, sigma_scale=1.0 / b)
    if scheme.kind == "importance":
        return SchemeConstants(ell_D=constants.ell_bar, sigma_scale=1.0 / b)
    if b == n:
        return SchemeConstants(ell_D=constants.ell, sigma_scale=0.0)
    ell_d = (n * (b - 1) / (b * (n - 1))) * constants.ell \
        + ((n - b) / (b * (n - 1))) * constants.ell_max
    return SchemeConstants(ell_D=ell_d, sigma_scale=(n - b) / (b * (n - 1)))


def _variance_at_solution(problem: ProblemInstance, scheme: SamplingScheme) -> float:
    f_i = problem.operator.eval_components(problem.reference_solution())
    f_bar = f_i.mean(axis=0)
    if scheme.kind == "importance":
        n = problem.n
        est = f_i / (n * scheme.probs[:, None])
        return float(np.sum(scheme.probs * np.sum((est - f_bar) ** 2, axis=1)))
    return float(np.mean(np.sum((f_i - f_bar) ** 2, axis=1)))


def sigma_star_sq(scheme: SamplingScheme, problem: ProblemInstance) -> float:
    """Variance of the single-draw estimator at x*, scaled by the batch factor."""
    base = _variance_at_solution(problem, scheme)
    scale = scheme_constants(scheme, problem.constants, problem.n).sigma_scale
    value = base * scale
    key = f"{scheme.kind}:b={scheme.batch}"
    problem.constants.sigma_star_sq[key] = value
    return value


def optimal_batchsize(problem: ProblemInstance, epsilon: float) -> int:
    """Oracle-optimal batch size for uniform sampling without replacement."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = problem.constants
    if c.mu <= 0:
        raise ValueError("optimal batch size needs mu > 0")
    n = problem.n
    sigma_us = _variance_at_solution(problem, SamplingScheme.uniform(1))
    me = c.mu * epsilon
    if c.ell_max >= sigma_us / me:
        return 1
    b = math.floor(n * (sigma_us - me * c.ell_max) / (sigma_us + me * (n * c.ell - c.ell_max)))
    return min(max(1, b), n)
