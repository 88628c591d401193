"""Certified parameter sextuples (A, B, C, rho, D1, D2) for the unified analysis.

Every estimator in this package satisfies, conditionally on the current point
x and its internal state,

    E||g - F(x*)||^2      <= 2A <F(x) - F(x*), x - x*> + B sigma^2 + D1
    E[sigma_next^2]       <= 2C <F(x) - F(x*), x - x*> + (1 - rho) sigma^2 + D2

for its own sigma^2 diagnostic.  The Lyapunov weight M defaults to 2B/rho
(zero when B is zero), which is the weight used by the convergence envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TheoryParams:
    A: float
    B: float
    C: float
    rho: float
    D1: float
    D2: float
    M: float = field(default=-1.0)

    def __post_init__(self):
        if min(self.A, self.B, self.C, self.D1, self.D2) < 0:
            raise ValueError("A, B, C, D1, D2 must be nonnegative")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.M == -1.0:
            object.__setattr__(self, "M", 0.0 if self.B == 0 else 2.0 * self.B / self.rho)
        if self.B > 0 and not self.M > self.B / self.rho:
            raise ValueError("need M > B/rho when B > 0")
        if self.B == 0 and self.M < 0:
            raise ValueError("M must be nonnegative")

    def stepsize_cap(self, mu: float) -> float:
        """Largest step admitted by the envelope: min{1/mu, 1/(2(A + C*M))}."""
        denom = 2.0 * (self.A + self.C * self.M)
        caps = []
        if mu > 0:
            caps.append(1.0 / mu)
        if denom > 0:
            caps.append(1.0 / denom)
        if not caps:
            raise ValueError("unbounded step size: mu = 0 and A + C*M = 0")
        return min(caps)

    def contraction(self, gamma: float, mu: float) -> float:
        """Per-iteration factor min{gamma*mu, rho - B/M} from the envelope."""
        slack = self.rho if self.B == 0 else self.rho - self.B / self.M
        return min(gamma * mu, slack)
