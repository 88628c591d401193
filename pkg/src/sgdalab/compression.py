"""Unbiased compression operators with exact variance parameters and bit accounting."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Quantizer:
    """kind "identity" transmits everything; "randk" keeps a uniform k-subset
    of coordinates scaled by d/k, which is unbiased with
    E||Q(x) - x||^2 = (d/k - 1) ||x||^2 (tight)."""

    kind: str = "identity"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("identity", "randk"):
            raise ValueError(f"unknown quantizer kind {self.kind!r}")
        if self.kind == "randk" and self.k < 1:
            raise ValueError("randk needs k >= 1")

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"


@dataclass(frozen=True)
class CompressedVector:
    dim: int
    indices: np.ndarray  # strictly increasing, < dim
    values: np.ndarray

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    @property
    def is_dense(self) -> bool:
        return len(self.indices) == self.dim


def compress(q: Quantizer, x: np.ndarray, rng: np.random.Generator) -> CompressedVector:
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if not q.is_identity and q.k > d:
        raise ValueError(f"k = {q.k} exceeds dimension {d}")
    if q.is_identity or q.k == d:
        return CompressedVector(dim=d, indices=np.arange(d), values=x.copy())
    idx = np.sort(rng.choice(d, size=q.k, replace=False))
    return CompressedVector(dim=d, indices=idx, values=(d / q.k) * x[idx])


def omega(q: Quantizer, d: int) -> float:
    """Variance parameter: E||Q(x) - x||^2 <= omega ||x||^2."""
    if q.is_identity or q.k >= d:
        return 0.0
    return d / q.k - 1.0


def encoded_bits(cv: CompressedVector, value_bits: int = 64) -> int:
    """On-wire size: dense vectors need no indices, sparse ones ceil(log2 d) each."""
    if value_bits not in (32, 64):
        raise ValueError("value_bits must be 32 or 64")
    if cv.is_dense:
        return cv.dim * value_bits
    if len(cv.indices) == 0:
        return 0
    return len(cv.indices) * (value_bits + math.ceil(math.log2(cv.dim)))


def enumerate_compressions(q: Quantizer, x: np.ndarray):
    """All (probability, Q(x)) outcomes; exact checks need C(d, k) enumerable."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if q.is_identity or q.k >= d:
        yield 1.0, x.copy()
        return
    total = math.comb(d, q.k)
    for subset in itertools.combinations(range(d), q.k):
        out = np.zeros(d)
        out[list(subset)] = (d / q.k) * x[list(subset)]
        yield 1.0 / total, out
