"""Regularized VIP instances: finite-sum affine operators, regularizers, constants.

The operator is F(x) = (1/n) sum_i F_i(x) with affine components
F_i(x) = A_i x + b_i.  Problem constants (quasi-strong monotonicity mu,
star-cocoercivity ell, per-component ell_i, averaged star-cocoercivity
ell_hat) are computed exactly from the affine structure via symmetric
generalized eigenproblems.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineComponent:
    """One summand F_i(x) = A_i x + b_i."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        b = np.asarray(self.offset, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if b.shape != (m.shape[0],):
            raise ValueError(f"offset shape {b.shape} does not match matrix {m.shape}")
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "offset", _readonly(b))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset


class FiniteSumOperator:
    """F(x) = (1/n) sum_i (A_i x + b_i), stored as stacked arrays.

    The full evaluation uses the precomputed mean matrix/offset, which agrees
    with the arithmetic mean of the component evaluations up to float
    round-off.
    """

    def __init__(self, components):
        comps = list(components)
        if not comps:
            raise ValueError("need at least one component")
        d = comps[0].dim
        for c in comps:
            if c.dim != d:
                raise ValueError("all components must share the same dimension")
        self.matrices = _readonly(np.stack([c.matrix for c in comps]))
        self.offsets = _readonly(np.stack([c.offset for c in comps]))
        self.mean_matrix = _readonly(self.matrices.mean(axis=0))
        self.mean_offset = _readonly(self.offsets.mean(axis=0))

    @classmethod
    def from_arrays(cls, matrices: np.ndarray, offsets: np.ndarray) -> "FiniteSumOperator":
        op = cls.__new__(cls)
        matrices = np.asarray(matrices, dtype=np.float64)
        offsets = np.asarray(offsets, dtype=np.float64)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ValueError(f"matrices must have shape (n, d, d), got {matrices.shape}")
        if offsets.shape != matrices.shape[:2]:
            raise ValueError("offsets must have shape (n, d) matching matrices")
        op.matrices = _readonly(matrices)
        op.offsets = _readonly(offsets)
        op.mean_matrix = _readonly(matrices.mean(axis=0))
        op.mean_offset = _readonly(offsets.mean(axis=0))
        return op

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def component(self, i: int) -> AffineComponent:
        return AffineComponent(self.matrices[i], self.offsets[i])

    def eval_component(self, i: int, x: np.ndarray) -> np.ndarray:
        """F_i(x) = A_i x + b_i."""
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        x = self._check_dim(x)
        return self.matrices[i] @ x + self.offsets[i]

    def eval_components(self, x: np.ndarray) -> np.ndarray:
        """All component values at once, shape (n, d)."""
        x = self._check_dim(x)
        return self.matrices @ x + self.offsets

    def eval_full(self, x: np.ndarray) -> np.ndarray:
        """F(x), the mean over components (n oracle calls in cost ledgers)."""
        x = self._check_dim(x)
        return self.mean_matrix @ x + self.mean_offset

    def eval_coordinate(self, x: np.ndarray, j: int) -> float:
        """Single coordinate [F(x)]_j without forming the full vector."""
        if not 0 <= j < self.dim:
            raise IndexError(f"coordinate {j} out of range [0, {self.dim})")
        x = self._check_dim(x)
        return float(self.mean_matrix[j] @ x + self.mean_offset[j])

    def subset_mean(self, indices) -> "FiniteSumOperator":
        """Operator restricted to a subset of components (used for sharding)."""
        idx = np.asarray(indices, dtype=int)
        return FiniteSumOperator.from_arrays(self.matrices[idx], self.offsets[idx])

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of dim {self.dim}, got shape {x.shape}")
        return x


@dataclass(frozen=True)
class Regularizer:
    """R(x) = lam * ||x||_1 + indicator(||x||_inf <= radius).

    kind "none" behaves identically to "l1_box" with lam=0, radius=inf.
    """

    kind: str = "none"
    lam: float = 0.0
    radius: float = math.inf

    def __post_init__(self):
        if self.kind not in ("none", "l1_box"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.kind == "none":
            object.__setattr__(self, "lam", 0.0)
            object.__setattr__(self, "radius", math.inf)

    @property
    def is_trivial(self) -> bool:
        return self.lam == 0.0 and math.isinf(self.radius)

    def value(self, x: np.ndarray) -> float:
        """R(x); +inf outside the box."""
        if not math.isinf(self.radius) and np.max(np.abs(x)) > self.radius * (1 + 1e-12):
            return math.inf
        return self.lam * float(np.sum(np.abs(x)))


def prox(reg: Regularizer, gamma: float, x: np.ndarray) -> np.ndarray:
    """Closed-form prox of gamma * R: sign(x) * min(max(|x| - gamma*lam, 0), radius)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=np.float64)
    if reg.is_trivial:
        return x.copy()
    shrunk = np.maximum(np.abs(x) - gamma * reg.lam, 0.0)
    if not math.isinf(reg.radius):
        shrunk = np.minimum(shrunk, reg.radius)
    return np.sign(x) * shrunk


@dataclass(frozen=True)
class GeneratorConfig:
    """Quadratic-game generator settings.

    mode "symmetric_plus_skew" builds A_i = S_i + mu_min*I + W_i with S_i
    symmetric PSD and W_i skew-symmetric, so lambda_min((A_i + A_i^T)/2)
    >= mu_min holds by construction and the eigenvalue real parts are
    >= mu_min by the Bendixson bound.  mode "spectral_flip" draws a Gaussian
    matrix, takes its complex eigendecomposition, pushes every eigenvalue's
    real part up to at least mu_min, and keeps the real part of the
    reconstruction; it guarantees eigenvalue real parts but not positive
    definiteness of the symmetric part.
    """

    n: int
    d: int
    seed: int
    mu_min: float = 1.0
    mode: str = "symmetric_plus_skew"
    offset_scale: float = 100.0
    sym_scale: float = 1.0
    skew_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not self.mu_min > 0:
            raise ValueError("mu_min must be positive")
        if self.mode not in ("symmetric_plus_skew", "spectral_flip"):
            raise ValueError(f"unknown generator mode {self.mode!r}")


_SPECTRAL_FLIP_RETRIES = 8


def _spectral_flip_matrix(d: int, mu_min: float, rng: np.random.Generator) -> np.ndarray:
    raw = rng.standard_normal((d, d))
    vals, vecs = np.linalg.eig(raw)
    flipped = np.maximum(np.abs(vals.real), mu_min) + 1j * vals.imag
    a = (vecs @ np.diag(flipped) @ np.linalg.inv(vecs)).real
    got = np.linalg.eigvals(a).real
    if got.min() < mu_min * (1 - 1e-6) - 1e-10:
        raise np.linalg.LinAlgError("reconstruction lost the eigenvalue shift")
    return a


def generate_quadratic_game(cfg: GeneratorConfig) -> FiniteSumOperator:
    """Generate n affine components whose eigenvalues have real part >= mu_min."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    d = cfg.d
    matrices = np.empty((cfg.n, d, d))
    for i in range(cfg.n):
        if cfg.mode == "symmetric_plus_skew":
            g = rng.standard_normal((d, d))
            sym = cfg.sym_scale * (g @ g.T) / d
            h = rng.standard_normal((d, d))
            skew = cfg.skew_scale * (h - h.T) / 2.0
            matrices[i] = sym + cfg.mu_min * np.eye(d) + skew
        else:
            for attempt in range(_SPECTRAL_FLIP_RETRIES):
                try:
                    matrices[i] = _spectral_flip_matrix(d, cfg.mu_min, rng)
                    break
                except np.linalg.LinAlgError:
                    continue
            else:
                raise RuntimeError(
                    f"spectral_flip failed for component {i} after "
                    f"{_SPECTRAL_FLIP_RETRIES} attempts"
                )
    offsets = rng.standard_normal((cfg.n, d)) * math.sqrt(cfg.offset_scale / d)
    return FiniteSumOperator.from_arrays(matrices, offsets)


def monotone_rotation_game(n: int, d: int, seed: int, mu_min: float = 1e-6,
                           skew_scale: float = 4e-5,
                           offset_spread: float = 1.0) -> FiniteSumOperator:
    """Nearly-monotone game: one shared rotation field plus spread offsets.

    All components share A = mu_min*I + skew_scale*W where W is a random
    orthogonal conjugation of 2x2 rotation blocks with frequencies in
    [0.5, 1]; heterogeneity comes from the offsets.  With mu_min tiny the
    field is a slow spiral, the regime where only the averaged iterate
    converges (measured by the restricted gap).
    """
    if d % 2 != 0:
        raise ValueError("rotation game needs even d")
    rng = np.random.Generator(np.random.PCG64(seed))
    freqs = rng.uniform(0.5, 1.0, size=d // 2)
    w = np.zeros((d, d))
    for j, om in enumerate(freqs):
        w[2 * j, 2 * j + 1] = om
        w[2 * j + 1, 2 * j] = -om
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    a = mu_min * np.eye(d) + skew_scale * (q @ w @ q.T)
    base = skew_scale * rng.standard_normal(d)
    offsets = base + skew_scale * offset_spread * rng.standard_normal((n, d))
    return FiniteSumOperator.from_arrays(np.tile(a, (n, 1, 1)), offsets)


@dataclass
class ProblemConstants:
    """Exact operator constants from the affine structure.

    mu      lambda_min of the symmetric part of the mean matrix
    ell     tightest constant with ||A z||^2 <= ell * z^T sym(A) z (mean A)
    ell_i   per-component analogue
    ell_hat tightest constant with (1/n) sum_i ||A_i z||^2 <= ell_hat * z^T sym(A) z
    """

    mu: float
    ell: float
    ell_i: np.ndarray
    ell_bar: float
    ell_hat: float
    sigma_star_sq: dict = field(default_factory=dict)

    @property
    def ell_max(self) -> float:
        return float(np.max(self.ell_i))


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


def _largest_generalized_eig(a: np.ndarray, b: np.ndarray) -> float:
    """Largest w with a v = w b v, for symmetric a and positive definite b."""
    w = scipy.linalg.eigh(a, b, eigvals_only=True)
    return float(w[-1])


def cocoercivity_constant(matrix: np.ndarray, what: str = "matrix") -> float:
    """Tightest ell with ||A z||^2 <= ell * z^T sym(A) z for all z."""
    s = _sym(matrix)
    if scipy.linalg.eigh(s, eigvals_only=True)[0] <= 0:
        raise ValueError(f"symmetric part of {what} is not positive definite")
    return _largest_generalized_eig(matrix.T @ matrix, s)


def averaged_cocoercivity_constant(matrices: np.ndarray, mean_matrix: np.ndarray) -> float:
    """Tightest ell_hat with mean_i ||A_i z||^2 <= ell_hat * z^T sym(mean A) z."""
    s = _sym(mean_matrix)
    if scipy.linalg.eigh(s, eigvals_only=True)[0] <= 0:
        raise ValueError("symmetric part of the mean matrix is not positive definite")
    gram = np.einsum("nij,nik->jk", matrices, matrices) / matrices.shape[0]
    return _largest_generalized_eig(_sym(gram), s)


def compute_constants(op: FiniteSumOperator) -> ProblemConstants:
    """Exact mu, ell, ell_i, ell_hat via generalized symmetric eigenproblems."""
    s_bar = _sym(op.mean_matrix)
    mu = float(scipy.linalg.eigh(s_bar, eigvals_only=True)[0])
    if mu <= 0:
        raise ValueError("mean matrix has non-positive-definite symmetric part")
    ell = _largest_generalized_eig(op.mean_matrix.T @ op.mean_matrix, s_bar)
    ell_i = np.array(
        [cocoercivity_constant(op.matrices[i], f"component {i}") for i in range(op.n)]
    )
    ell_hat = averaged_cocoercivity_constant(op.matrices, op.mean_matrix)
    return ProblemConstants(
        mu=mu, ell=ell, ell_i=ell_i, ell_bar=float(ell_i.mean()), ell_hat=ell_hat
    )


def solve_reference(
    op: FiniteSumOperator,
    reg: Regularizer,
    constants: ProblemConstants,
    tol: float = 1e-10,
    max_iter: int = 2_000_000,
) -> tuple[np.ndarray, float]:
    """Reference solution x* with fixed-point residual below tol.

    Unregularized problems are solved directly (linear system with one step
    of iterative refinement); otherwise a deterministic full prox iteration
    with step 1/ell runs until ||x - prox(x - gamma F(x))|| <= tol.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if constants.mu <= 0:
        raise ValueError("reference solution needs mu > 0")
    gamma = 1.0 / constants.ell

    def residual(x):
        return float(np.linalg.norm(x - prox(reg, gamma, x - gamma * op.eval_full(x))))

    a_bar, b_bar = op.mean_matrix, op.mean_offset
    x = np.linalg.solve(a_bar, -b_bar)
    x = x - np.linalg.solve(a_bar, a_bar @ x + b_bar)
    if reg.is_trivial:
        r = residual(x)
        if not r <= tol:
            raise RuntimeError(f"linear solve residual {r:g} exceeds tol {tol:g}")
        return x, r

    x = np.clip(x, -reg.radius, reg.radius)
    for _ in range(max_iter):
        x_next = prox(reg, gamma, x - gamma * op.eval_full(x))
        if np.linalg.norm(x - x_next) <= tol:
            r = residual(x_next)
            if r <= tol:
                return x_next, r
        x = x_next
    raise RuntimeError(f"prox iteration did not reach residual {tol:g} in {max_iter} steps")


class ProblemInstance:
    """Operator + regularizer with lazily computed constants and reference solution."""

    def __init__(self, operator: FiniteSumOperator, regularizer: Regularizer | None = None,
                 generator: GeneratorConfig | None = None):
        self.operator = operator
        self.regularizer = regularizer if regularizer is not None else Regularizer()
        self.generator = generator
        self._constants: ProblemConstants | None = None
        self._reference: tuple[np.ndarray, float] | None = None
        self._reference_tol: float | None = None

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def n(self) -> int:
        return self.operator.n

    @property
    def constants(self) -> ProblemConstants:
        if self._constants is None:
            self._constants = compute_constants(self.operator)
        return self._constants

    def reference_solution(self, tol: float = 1e-10) -> np.ndarray:
        if self._reference is None or self._reference_tol is None or tol < self._reference_tol:
            self._reference = solve_reference(self.operator, self.regularizer,
                                              self.constants, tol=tol)
            self._reference_tol = tol
        return self._reference[0]

    @property
    def reference_residual(self) -> float:
        if self._reference is None:
            self.reference_solution()
        return self._reference[1]

    def with_regularizer(self, reg: Regularizer) -> "ProblemInstance":
        return ProblemInstance(self.operator, reg, self.generator)


# ---------------------------------------------------------------------------
# Serialization: bit-exact round trip of problem instances via base64 of the
# raw little-endian float64 bytes.
# ---------------------------------------------------------------------------

def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data_b64": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data_b64"])
    a = np.frombuffer(raw, dtype="<f8").reshape(obj["shape"])
    return a.astype(np.float64)


def problem_to_dict(problem: ProblemInstance) -> dict:
    reg = problem.regularizer
    doc = {
        "schema_version": 1,
        "n": problem.n,
        "dim": problem.dim,
        "matrices": _encode_array(problem.operator.matrices),
        "offsets": _encode_array(problem.operator.offsets),
        "regularizer": {
            "kind": reg.kind,
            "lam": reg.lam,
            "radius": "inf" if math.isinf(reg.radius) else reg.radius,
        },
    }
    if problem.generator is not None:
        g = problem.generator
        doc["generator"] = {
            "n": g.n, "d": g.d, "seed": g.seed, "mu_min": g.mu_min, "mode": g.mode,
            "offset_scale": g.offset_scale, "sym_scale": g.sym_scale,
            "skew_scale": g.skew_scale,
        }
    return doc


def problem_from_dict(doc: dict) -> ProblemInstance:
    if doc.get("schema_version") != 1:
        raise ValueError(f"unsupported problem schema_version {doc.get('schema_version')!r}")
    matrices = _decode_array(doc["matrices"])
    offsets = _decode_array(doc["offsets"])
    r = doc["regularizer"]
    radius = math.inf if r["radius"] == "inf" else float(r["radius"])
    reg = Regularizer(kind=r["kind"], lam=float(r["lam"]), radius=radius)
    gen = None
    if "generator" in doc:
        gen = GeneratorConfig(**doc["generator"])
    return ProblemInstance(FiniteSumOperator.from_arrays(matrices, offsets), reg, gen)


def save_problem(problem: ProblemInstance, path) -> None:
    with open(path, "w") as f:
        json.dump(problem_to_dict(problem), f, indent=1)


def load_problem(path) -> ProblemInstance:
    with open(path) as f:
        return problem_from_dict(json.load(f))
