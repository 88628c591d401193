"""Independent reference oracles used by the tests; none of them share code
paths with the implementations they check."""

import numpy as np


def prox_oracle_1d(lam, r, gamma, x, iters=300):
    """argmin over [-r, r] of lam*|y| + (y - x)^2 / (2*gamma).

    The objective is convex with strictly increasing derivative
    lam*sign(y) + (y - x)/gamma away from 0, so bisection on the derivative
    sign pins the minimizer; the kink at 0 is the collapse point of the
    bracket when 0 is optimal.
    """
    def dh(y):
        return lam * np.sign(y) + (y - x) / gamma

    lo, hi = -r, r
    if dh(lo) >= 0:
        return lo
    if dh(hi) <= 0:
        return hi
    for _ in range(iters):
        mid = (lo + hi) / 2
        if dh(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def geometric_trace(rate, k):
    return rate ** np.asarray(k, dtype=float)
