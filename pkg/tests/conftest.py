import numpy as np
import pytest

from sgdalab.problem import (
    GeneratorConfig,
    ProblemInstance,
    Regularizer,
    generate_quadratic_game,
)


def make_problem(n=20, d=8, seed=2, mu_min=1.0, sym=0.4, skew=0.4, offset=20.0,
                 regularizer=None):
    cfg = GeneratorConfig(n=n, d=d, seed=seed, mu_min=mu_min, sym_scale=sym,
                          skew_scale=skew, offset_scale=offset)
    return ProblemInstance(generate_quadratic_game(cfg), regularizer, cfg)


@pytest.fixture(scope="session")
def problem():
    return make_problem()


@pytest.fixture(scope="session")
def problem_l1box():
    return make_problem(regularizer=Regularizer("l1_box", lam=0.1, radius=1.0))


@pytest.fixture(scope="session")
def toy():
    """Tiny instance with enumerable randomness."""
    return make_problem(n=4, d=3, seed=3, offset=4.0)


@pytest.fixture(scope="session")
def toy_l1box():
    return make_problem(n=4, d=3, seed=3, offset=4.0,
                        regularizer=Regularizer("l1_box", lam=0.1, radius=2.0))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
