"""Solver laboratory for regularized variational inequalities.

The problem is to find x* with ``<F(x*), x - x*> + R(x) - R(x*) >= 0`` for all
x, where F is a finite-sum affine operator and R is a simple regularizer with
a closed-form prox.  The package provides quadratic-game generators, a single
generic proximal descent-ascent loop driven by interchangeable stochastic
gradient estimators (plain sampling, variance reduction, coordinate
randomization, and simulated distributed estimators with compression),
certified theory constants for each estimator, verification checks, and an
experiment CLI.
"""

__version__ = "0.1.0"

from sgdalab.problem import (
    AffineComponent,
    FiniteSumOperator,
    GeneratorConfig,
    ProblemConstants,
    ProblemInstance,
    Regularizer,
    compute_constants,
    generate_quadratic_game,
    prox,
    solve_reference,
)
from sgdalab.theory import TheoryParams

__all__ = [
    "AffineComponent",
    "FiniteSumOperator",
    "GeneratorConfig",
    "ProblemConstants",
    "ProblemInstance",
    "Regularizer",
    "TheoryParams",
    "compute_constants",
    "generate_quadratic_game",
    "prox",
    "solve_reference",
]
