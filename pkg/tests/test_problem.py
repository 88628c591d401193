import math

import numpy as np
import pytest
import scipy.linalg

from sgdalab.problem import (
    AffineComponent,
    FiniteSumOperator,
    GeneratorConfig,
    ProblemInstance,
    Regularizer,
    compute_constants,
    generate_quadratic_game,
    load_problem,
    monotone_rotation_game,
    problem_from_dict,
    problem_to_dict,
    prox,
    save_problem,
    solve_reference,
)

from conftest import make_problem
from oracles import prox_oracle_1d


def naive_matvec(a, b, x):
    d = len(x)
    out = np.zeros(d)
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += a[i, j] * x[j]
        out[i] = acc + b[i]
    return out


class TestEvaluation:
    def test_component_offset_at_zero(self):
        op = FiniteSumOperator([
            AffineComponent(np.array([[2.0, 0], [0, 2.0]]), np.array([1.0, -1.0])),
        ])
        assert np.array_equal(op.eval_component(0, np.zeros(2)), [1.0, -1.0])

    def test_identity_component(self, rng):
        op = FiniteSumOperator([AffineComponent(np.eye(3), np.zeros(3))])
        x = rng.standard_normal(3)
        assert np.allclose(op.eval_component(0, x), x, rtol=0, atol=0)

    def test_component_matches_naive_matvec(self, rng):
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal(3)
        op = FiniteSumOperator([AffineComponent(a, b)])
        for _ in range(20):
            x = rng.standard_normal(3)
            got = op.eval_component(0, x)
            want = naive_matvec(a, b, x)
            assert np.linalg.norm(got - want) <= 1e-12 * (1 + np.linalg.norm(want))

    def test_full_is_mean_of_scalars(self):
        op = FiniteSumOperator([
            AffineComponent(np.eye(1), np.zeros(1)),
            AffineComponent(3 * np.eye(1), np.zeros(1)),
        ])
        assert np.allclose(op.eval_full(np.array([2.0])), [4.0])

    def test_full_identical_components(self, rng):
        a, b = rng.standard_normal((4, 4)), rng.standard_normal(4)
        op = FiniteSumOperator([AffineComponent(a, b)] * 5)
        x = rng.standard_normal(4)
        assert np.allclose(op.eval_full(x), op.eval_component(2, x), rtol=1e-14)

    def test_full_matches_compensated_sum(self, rng):
        op = make_problem(n=30, d=6, seed=9).operator
        for _ in range(10):
            x = rng.standard_normal(6)
            vals = op.eval_components(x)
            want = np.array([math.fsum(vals[:, j]) for j in range(6)]) / op.n
            got = op.eval_full(x)
            assert np.linalg.norm(got - want) <= 1e-12 * (1 + np.linalg.norm(want))

    def test_eval_coordinate(self, rng):
        op = make_problem(n=5, d=7, seed=4).operator
        x = rng.standard_normal(7)
        f = op.eval_full(x)
        for j in range(7):
            assert op.eval_coordinate(x, j) == pytest.approx(f[j], rel=1e-14)

    def test_errors(self):
        op = FiniteSumOperator([AffineComponent(np.eye(2), np.zeros(2))])
        with pytest.raises(IndexError):
            op.eval_component(1, np.zeros(2))
        with pytest.raises(ValueError):
            op.eval_full(np.zeros(3))
        with pytest.raises(ValueError):
            AffineComponent(np.eye(2), np.zeros(3))
        with pytest.raises(ValueError):
            FiniteSumOperator([])


class TestGenerator:
    def test_scalar_case(self):
        op = generate_quadratic_game(GeneratorConfig(n=1, d=1, seed=0, mu_min=0.5))
        assert op.matrices[0, 0, 0] >= 0.5

    def test_symmetric_part_bound(self):
        cfg = GeneratorConfig(n=8, d=6, seed=1, mu_min=0.7)
        op = generate_quadratic_game(cfg)
        for i in range(op.n):
            sym = (op.matrices[i] + op.matrices[i].T) / 2
            lam = scipy.linalg.eigh(sym, eigvals_only=True)[0]
            assert lam >= 0.7 - 1e-12
            # Bendixson: eigenvalue real parts are at least lambda_min(sym)
            assert np.linalg.eigvals(op.matrices[i]).real.min() >= 0.7 - 1e-10

    def test_spectral_flip_real_parts(self):
        cfg = GeneratorConfig(n=6, d=5, seed=2, mu_min=0.3, mode="spectral_flip")
        op = generate_quadratic_game(cfg)
        for i in range(op.n):
            assert np.linalg.eigvals(op.matrices[i]).real.min() >= 0.3 * (1 - 1e-6)

    def test_seeded_determinism(self):
        cfg = GeneratorConfig(n=5, d=4, seed=11, mu_min=1.0)
        a = generate_quadratic_game(cfg)
        b = generate_quadratic_game(cfg)
        assert np.array_equal(a.matrices, b.matrices)
        assert np.array_equal(a.offsets, b.offsets)
        cfg2 = GeneratorConfig(n=5, d=4, seed=11, mu_min=1.0, mode="spectral_flip")
        assert np.array_equal(generate_quadratic_game(cfg2).matrices,
                              generate_quadratic_game(cfg2).matrices)

    def test_offset_variance_scale(self):
        cfg = GeneratorConfig(n=400, d=10, seed=3, mu_min=1.0, offset_scale=100.0)
        op = generate_quadratic_game(cfg)
        assert op.offsets.var() == pytest.approx(100.0 / 10, rel=0.15)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            GeneratorConfig(n=0, d=3, seed=0)
        with pytest.raises(ValueError):
            GeneratorConfig(n=3, d=3, seed=0, mu_min=0.0)
        with pytest.raises(ValueError):
            GeneratorConfig(n=3, d=3, seed=0, mode="nope")

    def test_rotation_game(self):
        op = monotone_rotation_game(6, 4, seed=5, mu_min=1e-6)
        c = compute_constants(op)
        assert c.mu == pytest.approx(1e-6, rel=1e-6)


class TestProx:
    def test_none_identity(self, rng):
        x = rng.standard_normal(5)
        assert np.array_equal(prox(Regularizer(), 0.5, x), x)

    def test_worked_example(self):
        # gamma*lam = 0.3, r = 1: componentwise shrink then clip
        reg = Regularizer("l1_box", lam=0.6, radius=1.0)
        got = prox(reg, 0.5, np.array([2.0, -0.5, 0.1]))
        assert np.allclose(got, [1.0, -0.2, 0.0], atol=1e-15)

    def test_degenerate_parameters(self, rng):
        x = rng.standard_normal(4)
        reg = Regularizer("l1_box", lam=0.0, radius=math.inf)
        assert np.array_equal(prox(reg, 1.0, x), x)

    def test_requires_positive_gamma(self):
        with pytest.raises(ValueError):
            prox(Regularizer(), 0.0, np.zeros(2))

    def test_matches_oracle(self, rng):
        for _ in range(1000):
            lam = rng.uniform(0, 2)
            r = rng.uniform(0.1, 3)
            gamma = rng.uniform(0.01, 2)
            x = rng.uniform(-5, 5)
            reg = Regularizer("l1_box", lam=lam, radius=r)
            got = prox(reg, gamma, np.array([x]))[0]
            want = prox_oracle_1d(lam, r, gamma, x)
            assert abs(got - want) <= 1e-10

    def test_nonexpansive(self, rng):
        reg = Regularizer("l1_box", lam=0.3, radius=1.5)
        for _ in range(200):
            x, y = rng.standard_normal(6), rng.standard_normal(6)
            lhs = np.linalg.norm(prox(reg, 0.7, x) - prox(reg, 0.7, y))
            assert lhs <= np.linalg.norm(x - y) + 1e-12


class TestConstants:
    def test_symmetric_eigenvalues(self):
        # symmetric mean matrix with eigenvalues {1, 4}: mu = 1, ell = 4
        q = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        a = q @ np.diag([1.0, 4.0]) @ q.T
        c = compute_constants(FiniteSumOperator([AffineComponent(a, np.zeros(2))]))
        assert c.mu == pytest.approx(1.0)
        assert c.ell == pytest.approx(4.0)

    def test_identity(self):
        c = compute_constants(FiniteSumOperator([AffineComponent(np.eye(3), np.zeros(3))]))
        assert c.mu == pytest.approx(1.0) and c.ell == pytest.approx(1.0)

    def test_single_component(self, rng):
        op = make_problem(n=1, d=5, seed=7).operator
        c = compute_constants(op)
        assert c.ell_hat == pytest.approx(c.ell_i[0], rel=1e-10)
        assert c.ell <= c.ell_i[0] + 1e-10

    def test_orderings(self, problem):
        c = problem.constants
        assert 0 < c.mu <= c.ell + 1e-12
        assert c.ell_bar <= c.ell_max + 1e-12
        assert c.ell <= c.ell_hat + 1e-10  # Jensen

    def test_non_pd_rejected(self):
        a = np.array([[1.0, 10.0], [0.0, 1.0]])  # indefinite symmetric part
        with pytest.raises(ValueError):
            compute_constants(FiniteSumOperator([AffineComponent(a, np.zeros(2))]))

    def test_quasi_strong_monotonicity_sweep(self, problem, rng):
        # <F(x) - F(x*), x - x*> >= mu ||x - x*||^2 over 1e4 random points
        c = problem.constants
        op = problem.operator
        x_star = problem.reference_solution()
        z = rng.standard_normal((10_000, problem.dim)) * 2.0
        df = z @ op.mean_matrix.T
        inner = np.sum(df * z, axis=1)
        sq = np.sum(z * z, axis=1)
        assert np.all(inner >= c.mu * sq - 1e-9 * (1 + sq))
        del x_star

    def test_star_cocoercivity_sweep(self, problem, rng):
        c = problem.constants
        op = problem.operator
        z = rng.standard_normal((10_000, problem.dim)) * 2.0
        df = z @ op.mean_matrix.T
        inner = np.sum(df * z, axis=1)
        assert np.all(np.sum(df * df, axis=1) <= c.ell * inner + 1e-9 * (1 + inner))

    def test_averaged_cocoercivity_sweep(self, problem, rng):
        c = problem.constants
        op = problem.operator
        z = rng.standard_normal((10_000, problem.dim)) * 2.0
        df = z @ op.mean_matrix.T
        inner = np.sum(df * z, axis=1)
        per = np.einsum("nij,kj->kni", op.matrices, z)
        avg = np.mean(np.sum(per * per, axis=2), axis=1)
        assert np.all(avg <= c.ell_hat * inner + 1e-9 * (1 + inner))


class TestReferenceSolution:
    def test_scalar_root(self):
        op = FiniteSumOperator([AffineComponent(np.eye(1), np.array([-1.0]))])
        x, res = solve_reference(op, Regularizer(), compute_constants(op))
        assert x[0] == pytest.approx(1.0)
        assert res <= 1e-10

    def test_unconstrained_residual(self, problem):
        x_star = problem.reference_solution()
        assert np.linalg.norm(problem.operator.eval_full(x_star)) <= 1e-10
        assert problem.reference_residual <= 1e-10

    def test_box_binding_solution(self):
        # radius small enough that the unconstrained root is outside the box
        p = make_problem(n=6, d=2, seed=13, offset=50.0)
        unconstrained = p.reference_solution()
        r = 0.5 * np.max(np.abs(unconstrained))
        reg = Regularizer("l1_box", lam=0.0, radius=r)
        pc = p.with_regularizer(reg)
        x = pc.reference_solution(tol=1e-11)
        assert pc.reference_residual <= 1e-11
        assert np.max(np.abs(x)) == pytest.approx(r, abs=1e-9)  # on the boundary
        # dense grid oracle at d = 2: no feasible point improves the residual map
        op = pc.operator
        gamma = 1.0 / pc.constants.ell
        grid = np.linspace(-r, r, 81)
        best = min(
            np.linalg.norm(np.array([u, v]) - np.clip(
                np.array([u, v]) - gamma * op.eval_full(np.array([u, v])), -r, r))
            for u in grid for v in grid
        )
        assert best >= -1e-12
        resid_x = np.linalg.norm(x - np.clip(x - gamma * op.eval_full(x), -r, r))
        assert resid_x <= best + 1e-9

    def test_needs_positive_mu(self):
        op = FiniteSumOperator([AffineComponent(np.zeros((1, 1)), np.ones(1))])
        with pytest.raises(ValueError):
            ProblemInstance(op).reference_solution()


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path, problem_l1box):
        path = tmp_path / "p.json"
        save_problem(problem_l1box, path)
        back = load_problem(path)
        assert np.array_equal(back.operator.matrices, problem_l1box.operator.matrices)
        assert np.array_equal(back.operator.offsets, problem_l1box.operator.offsets)
        assert back.regularizer == problem_l1box.regularizer
        assert back.generator == problem_l1box.generator

    def test_infinite_radius(self, problem):
        doc = problem_to_dict(problem)
        assert doc["regularizer"]["radius"] == "inf"
        back = problem_from_dict(doc)
        assert math.isinf(back.regularizer.radius)

    def test_rejects_unknown_schema(self, problem):
        doc = problem_to_dict(problem)
        doc["schema_version"] = 99
        with pytest.raises(ValueError):
            problem_from_dict(doc)
