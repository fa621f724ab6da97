import math

import numpy as np
import pytest

from calibration.services import calibrate
from certify.services import check_localmin_J0, check_localmin_JPsi, threshold_to_J0
from core.exceptions import SolverConfigError
from fidelity.services import FidelitySpec, ProblemSpec
from solver.services import (
    Backtracking, FixedStep, SolverConfig, StopReason, objective_J0, objective_JPsi, pga_step, solve,
    stopping_residual,
)


@pytest.fixture
def ls_problem():
    return ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0, 1.0], [1.0, 3.0]], 0.5)


@pytest.fixture
def kl_problem():
    fidelity = FidelitySpec('KL', [0.2, 0.2], b=0.1)
    A = [[0.45, 0.8], [0.85, 0.25]]
    return ProblemSpec(fidelity, A, 0.06 * fidelity.value(np.zeros(2)), constraint='nonneg')


def random_problem(rng, kind='LS', M=6, N=9, binary_counts=False):
    if kind == 'KL':
        A = rng.uniform(0.0, 1.0, (M, N))
        A /= np.linalg.norm(A, axis=0)
        x_true = np.zeros(N)
        x_true[rng.choice(N, 2, replace=False)] = rng.uniform(0.5, 1.5, 2)
        y = rng.poisson(A @ x_true + 0.3).astype(float)
        if binary_counts:
            # com y <= 1, ||A||^2 / b^2 limita a curvatura
            y = np.minimum(y, 1.0)
        return ProblemSpec(FidelitySpec('KL', y, b=0.3), A, 0.05, constraint='nonneg')
    A = rng.standard_normal((M, N))
    A /= np.linalg.norm(A, axis=0)
    if kind == 'LR':
        y = rng.integers(0, 2, M).astype(float)
        return ProblemSpec(FidelitySpec('LR', y), A, 0.05, lambda2=0.01)
    y = A[:, :2] @ np.array([1.0, -0.7]) + 0.05 * rng.standard_normal(M)
    return ProblemSpec(FidelitySpec('LS', y), A, 0.02)


def generator_for(problem):
    return 'kl' if problem.nonneg else 'power'


def assert_nonincreasing(values, rtol=1e-10):
    values = np.asarray(values)
    assert np.all(np.diff(values) <= rtol * np.maximum(1.0, np.abs(values[:-1])))


class TestConfig:

    def test_defaults_come_from_settings(self, settings):
        settings.BREX = {**settings.BREX, 'MAX_ITER': 17, 'REL_TOL': 1e-5}
        config = SolverConfig()
        assert config.max_iter == 17
        assert config.rel_tol == 1e-5
        assert isinstance(config.step, Backtracking)

    def test_validation(self, ls_problem):
        with pytest.raises(SolverConfigError):
            FixedStep(0.0)
        with pytest.raises(SolverConfigError):
            Backtracking(shrink=1.0)
        with pytest.raises(SolverConfigError):
            SolverConfig(max_iter=0)
        with pytest.raises(SolverConfigError):
            SolverConfig.fixed_for(ls_problem, 1.0)

    def test_fixed_step_must_stay_below_inverse_lipschitz(self, ls_problem):
        with pytest.raises(SolverConfigError):
            solve(ls_problem, None, SolverConfig(step=FixedStep(0.1)))

    def test_fixed_for(self, ls_problem):
        config = SolverConfig.fixed_for(ls_problem, 0.5)
        assert config.step.rho == pytest.approx(0.5 / 16.0)


class TestStep:

    def test_l0_step_is_hard_threshold(self, ls_problem):
        x = pga_step(ls_problem, None, 0.05, np.zeros(2))
        assert x == pytest.approx([0.25, 0.35])
        x = pga_step(ls_problem, None, 0.03, np.zeros(2))
        # limiar sqrt(2 rho lambda0) entre 0.15 e 0.21
        assert x == pytest.approx([0.0, 0.21])

    def test_relaxed_step_from_origin(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        rho = 0.99 / 16.0
        x = pga_step(ls_problem, relaxation, rho, np.zeros(2))
        v0 = 5.0 * rho
        assert x[0] == pytest.approx((v0 - rho * math.sqrt(10.0)) / (1.0 - 10.0 * rho))
        assert x[1] == pytest.approx(7.0 * rho)


class TestSolve:

    def test_relaxed_run_reaches_the_global_minimizer(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        result = solve(ls_problem, relaxation, SolverConfig.fixed_for(ls_problem))
        assert result.stop_reason is StopReason.TOLERANCE
        x = threshold_to_J0(relaxation, result.x_final)
        assert objective_J0(ls_problem, x) == pytest.approx(0.55, abs=1e-6)
        assert x == pytest.approx([0.0, 0.7], abs=1e-5)
        record = check_localmin_JPsi(ls_problem, relaxation, result.x_final, tol=1e-4)
        assert record.is_localmin_jpsi and record.is_strict

    def test_stopping_residual_covers_the_final_point(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        config = SolverConfig.fixed_for(ls_problem)
        result = solve(ls_problem, relaxation, config)
        tol = stopping_residual(ls_problem, config, result)
        assert 0.0 < tol < 1e-3
        assert check_localmin_JPsi(ls_problem, relaxation, result.x_final, tol).is_localmin_jpsi

    def test_fixed_step_is_monotone(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        result = solve(ls_problem, relaxation, SolverConfig.fixed_for(ls_problem))
        start = objective_JPsi(ls_problem, relaxation, np.zeros(2))
        assert_nonincreasing([start] + [row.j_psi for row in result.trace])

    def test_backtracking_is_monotone(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        result = solve(ls_problem, relaxation)
        assert result.stop_reason is StopReason.TOLERANCE
        assert_nonincreasing([row.j_psi for row in result.trace])
        assert all(row.step <= 2.0 / 16.0 + 1e-12 for row in result.trace)

    def test_kl_run(self, kl_problem):
        relaxation, _ = calibrate(kl_problem, 'kl')
        result = solve(kl_problem, relaxation, SolverConfig.fixed_for(kl_problem))
        assert np.all(result.x_final >= 0.0)
        assert_nonincreasing([row.j_psi for row in result.trace])
        assert result.stop_reason is not StopReason.DOMAIN_ERROR

    def test_l0_penalty(self, ls_problem):
        result = solve(ls_problem, None, SolverConfig.fixed_for(ls_problem))
        assert all(math.isnan(row.j_psi) for row in result.trace)
        assert_nonincreasing([row.j_0 for row in result.trace])
        j0 = objective_J0(ls_problem, result.x_final)
        assert any(abs(j0 - v) < 1e-6 for v in (0.55, 1.0, 1.75, 2.5))

    def test_keep_iterates_and_max_iter(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power')
        config = SolverConfig.fixed_for(ls_problem, max_iter=3, keep_iterates=True, x0=np.array([1.0, 1.0]))
        result = solve(ls_problem, relaxation, config)
        assert result.stop_reason is StopReason.MAX_ITER
        assert result.iterations == 3
        assert len(result.iterates) == 4
        assert result.iterates[0] == pytest.approx([1.0, 1.0])
        assert result.iterates[-1] == pytest.approx(result.x_final)
        assert [row.iteration for row in result.trace] == [1, 2, 3]

    def test_nonneg_projects_the_start(self, kl_problem):
        config = SolverConfig.fixed_for(kl_problem, max_iter=1, keep_iterates=True, x0=np.array([-1.0, 0.5]))
        result = solve(kl_problem, None, config)
        assert result.iterates[0] == pytest.approx([0.0, 0.5])

    @pytest.mark.parametrize('kind', ['LS', 'LR', 'KL'])
    def test_relaxation_never_exceeds_l0(self, kind):
        rng = np.random.default_rng(3)
        for _ in range(20):
            problem = random_problem(rng, kind, binary_counts=True)
            relaxation, report = calibrate(problem, generator_for(problem))
            assert report.is_exact
            result = solve(problem, relaxation, SolverConfig.fixed_for(problem, max_iter=500))
            assert_nonincreasing([row.j_psi for row in result.trace])
            for row in result.trace:
                assert row.j_psi <= row.j_0 + 1e-12

    @pytest.mark.parametrize('kind', ['LS', 'LR', 'KL'])
    def test_certified_relaxed_limits_are_l0_minimizers(self, kind):
        rng = np.random.default_rng(21)
        certified = 0
        for _ in range(50):
            problem = random_problem(rng, kind, M=6, N=8)
            relaxation, _ = calibrate(problem, generator_for(problem))
            config = SolverConfig(max_iter=2000)
            result = solve(problem, relaxation, config)
            x = result.x_final
            tol = max(1e-6, stopping_residual(problem, config, result))
            if not check_localmin_JPsi(problem, relaxation, x, tol).is_localmin_jpsi:
                continue
            certified += 1
            assert check_localmin_J0(problem, x, tol)
            assert objective_JPsi(problem, relaxation, x) == pytest.approx(objective_J0(problem, x), abs=1e-8)

            # B_Psi <= lambda0 ||.||_0 coordenada a coordenada
            X = problem.project(rng.uniform(-2.0, 2.0, (10_000, problem.N)))
            for n in range(problem.N):
                g = relaxation.generator(n)
                if g is not None:
                    assert np.all(g.beta(X[:, n]) <= problem.lambda0 * (X[:, n] != 0) + 1e-12)
        assert certified >= 40
