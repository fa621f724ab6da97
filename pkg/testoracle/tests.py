import math

import numpy as np
import pytest

from calibration.services import calibrate
from core.exceptions import DomainError
from fidelity.services import FidelitySpec, ProblemSpec
from generating.services import (
    FidelityMatchedGenerator, KLGenerator, PowerGenerator, ShannonGenerator, beta_value, brex_value,
)
from solver.services import objective_J0, objective_JPsi
from testoracle.services import (
    GridSpec, bregman_matrix, covering_grid, finite_difference, numeric_gradient, oracle_beta,
    oracle_convexity, oracle_prox, oracle_prox_batch, oracle_s_transform, oracle_s_values,
)


def generators():
    return [
        PowerGenerator(gamma=10.0, lambda0=0.5),
        PowerGenerator(gamma=2.0, lambda0=0.3, p=1.5),
        ShannonGenerator(gamma=2.0, lambda0=1.0),
        KLGenerator(gamma=1.0, lambda0=0.2, y=1.0, b=0.1),
        FidelityMatchedGenerator(gamma=1.0, lambda0=0.5, a=(3.0, 1.0), y=(1.0, 2.0)),
    ]


def sample_points(g, count=15):
    frac = np.linspace(0.05, 1.5, count)
    points = list(frac * g.alpha_plus)
    if not g.nonneg:
        points += list(frac * g.alpha_minus)
    return points


class TestHelpers:

    def test_grid_validation(self):
        assert GridSpec(-1.0, 1.0, 5).values().tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
        with pytest.raises(DomainError):
            GridSpec(1.0, 1.0)
        with pytest.raises(DomainError):
            GridSpec(0.0, math.inf)
        with pytest.raises(DomainError):
            GridSpec(0.0, 1.0, 2)

    def test_covering_grid(self):
        g = PowerGenerator(gamma=1.0, lambda0=0.5)
        grid = covering_grid(g, x=3.0)
        assert (grid.lo, grid.hi) == (-2.0, 4.0)
        assert covering_grid(ShannonGenerator(gamma=2.0, lambda0=1.0)).lo == 0.0

    def test_convexity(self):
        t = np.linspace(-2.0, 2.0, 101)
        assert oracle_convexity(t ** 2)
        assert oracle_convexity(np.abs(t))
        assert not oracle_convexity(-(t ** 2))
        assert oracle_convexity([1.0, 2.0])

    def test_finite_differences(self):
        x = np.linspace(0.0, 3.0, 7)
        assert finite_difference(np.sin, x) == pytest.approx(np.cos(x), abs=1e-8)
        grad = numeric_gradient(lambda v: float(v @ v), np.array([1.0, -2.0, 0.5]))
        assert grad == pytest.approx([2.0, -4.0, 1.0], abs=1e-6)

    def test_bregman_matrix(self):
        g = PowerGenerator(gamma=2.0, lambda0=0.5)
        z = np.array([-1.0, 0.0, 0.5])
        d = bregman_matrix(g, z, z)
        assert np.diag(d).tolist() == [0.0, 0.0, 0.0]
        assert d[0, 1] == pytest.approx(1.0)
        assert np.all(d >= 0.0)


class TestOracleBeta:

    @pytest.mark.parametrize('g', generators(), ids=lambda g: g.kind.value)
    def test_matches_closed_form(self, g):
        for x in sample_points(g):
            assert oracle_beta(g, x) == pytest.approx(beta_value(g, x), abs=1e-6)

    @pytest.mark.parametrize('g', generators(), ids=lambda g: g.kind.value)
    def test_stable_under_grid_refinement(self, g):
        for x in sample_points(g, count=7):
            coarse = oracle_beta(g, x, grid=covering_grid(g, x, points=2001))
            fine = oracle_beta(g, x, grid=covering_grid(g, x, points=20001))
            assert abs(fine - coarse) < 1e-7

    def test_zero_and_saturation(self):
        g = PowerGenerator(gamma=10.0, lambda0=0.5)
        assert oracle_beta(g, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert oracle_beta(g, 2.0) == pytest.approx(0.5, abs=1e-12)
        with pytest.raises(DomainError):
            oracle_beta(ShannonGenerator(gamma=1.0, lambda0=1.0), -1.0)


class TestOracleProx:

    def test_continuous_power_prox(self):
        g = PowerGenerator(gamma=10.0, lambda0=0.5)
        rho = 0.05
        xs = np.array([0.1, 0.2, 0.25, 0.3, 0.5, -0.25])
        u, _ = oracle_prox_batch(g, rho, xs)
        shift = rho * math.sqrt(10.0)
        # rho gamma < 1: prox contínuo, linear dentro do intervalo
        expected = np.sign(xs) * np.clip((np.abs(xs) - shift) / (1.0 - 10.0 * rho), 0.0, None)
        expected = np.where(np.abs(xs) >= g.alpha_plus, xs, expected)
        assert u == pytest.approx(expected, abs=1e-6)

    def test_objective_is_minimal(self):
        g = ShannonGenerator(gamma=2.0, lambda0=1.0)
        u, value = oracle_prox(g, 0.3, 0.4)
        grid = np.linspace(0.0, 2.0, 4001)
        others = np.asarray(beta_value(g, grid)) + (grid - 0.4) ** 2 / 0.6
        assert value <= np.min(others) + 1e-9
        assert u >= 0.0


class TestSTransform:

    @pytest.mark.parametrize('g', generators(), ids=lambda g: g.kind.value)
    def test_first_transform_is_nonpositive(self, g):
        lo = 0.0 if g.nonneg else 2.0 * g.alpha_minus
        z = np.unique(np.concatenate([np.linspace(lo, 2.0 * g.alpha_plus, 201), [0.0]]))
        s = oracle_s_values(g, z)
        assert np.all(s <= 1e-15)
        assert s[z == 0.0][0] == 0.0
        assert np.all(s >= -g.lambda0 - 1e-12)

    @pytest.mark.parametrize('g', generators(), ids=lambda g: g.kind.value)
    def test_second_transform_recovers_beta(self, g):
        lo = 0.0 if g.nonneg else 2.0 * g.alpha_minus
        z = np.linspace(lo, 2.0 * g.alpha_plus, 201)
        for x in sample_points(g):
            assert oracle_s_transform(g, z, x) == pytest.approx(beta_value(g, x), abs=1e-10)

    def test_relaxation_sum(self):
        problem = ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0, 1.0], [1.0, 3.0]], 0.5)
        relaxation, _ = calibrate(problem, 'power')
        z = np.linspace(-1.0, 1.0, 101)
        x = np.array([0.1, -0.5])
        assert oracle_s_transform(relaxation, z, x) == pytest.approx(brex_value(relaxation, x), abs=1e-10)


class TestConvexEnvelope:

    @pytest.fixture
    def scalar_problem(self):
        return ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0], [1.0]], 0.5)

    def test_fidelity_matched_at_unit_gamma(self, scalar_problem):
        relaxation, _ = calibrate(scalar_problem, 'fidelity', gamma=1.0)
        g = relaxation.generator(0)
        values = {
            piece: np.array([objective_JPsi(scalar_problem, relaxation, [t]) for t in np.linspace(lo, hi, 101)])
            for piece, (lo, hi) in {'neg': (g.alpha_minus, 0.0), 'pos': (0.0, g.alpha_plus)}.items()
        }
        # afim em cada lado de 0
        for piece in values.values():
            assert oracle_convexity(piece, tol=1e-9)
            assert oracle_convexity(-piece, tol=1e-9)
        wide = np.linspace(3.0 * g.alpha_minus, 3.0 * g.alpha_plus, 601)
        assert oracle_convexity([objective_JPsi(scalar_problem, relaxation, [t]) for t in wide], tol=1e-9)

    @staticmethod
    def random_scalar_problem(kind, rng):
        if kind == 'LS':
            fidelity = FidelitySpec('LS', rng.standard_normal(3))
            return ProblemSpec(fidelity, rng.standard_normal((3, 1)), rng.uniform(0.1, 1.0))
        if kind == 'LR':
            fidelity = FidelitySpec('LR', rng.integers(0, 2, 3).astype(float))
            return ProblemSpec(fidelity, rng.standard_normal((3, 1)), rng.uniform(0.1, 1.0), lambda2=0.5)
        fidelity = FidelitySpec('KL', rng.poisson(2.0, 3).astype(float), b=0.3)
        return ProblemSpec(
            fidelity, rng.uniform(0.2, 1.0, (3, 1)), rng.uniform(0.1, 1.0), lambda2=0.1, constraint='nonneg',
        )

    @pytest.mark.parametrize('kind', ['LS', 'LR', 'KL'])
    def test_fidelity_matched_relaxation_is_the_convex_envelope(self, kind):
        rng = np.random.default_rng(17)
        for _ in range(20):
            problem = self.random_scalar_problem(kind, rng)
            relaxation, _ = calibrate(problem, 'fidelity', gamma=1.0)
            g = relaxation.generator(0)
            lo, hi = (0.0 if problem.nonneg else 3.0 * g.alpha_minus), 3.0 * g.alpha_plus
            t = np.linspace(lo, hi, 601)
            j_psi = np.array([objective_JPsi(problem, relaxation, [v]) for v in t])
            j_0 = np.array([objective_J0(problem, [v]) for v in t])
            assert oracle_convexity(j_psi, tol=1e-8)

            outside = (t >= g.alpha_plus) | ((t <= g.alpha_minus) & (t < 0))
            np.testing.assert_allclose(j_psi[outside], j_0[outside], rtol=0.0, atol=1e-8)

            # afim em [alpha^-, 0] e em [0, alpha^+]
            pieces = [(0.0, g.alpha_plus)] if problem.nonneg else [(g.alpha_minus, 0.0), (0.0, g.alpha_plus)]
            for a, b in pieces:
                values = np.array([objective_JPsi(problem, relaxation, [v]) for v in np.linspace(a, b, 101)])
                assert np.max(np.abs(np.diff(values, 2))) < 1e-8

    def test_power_at_threshold_is_affine_inside_interval(self, scalar_problem):
        relaxation, _ = calibrate(scalar_problem, 'power')
        g = relaxation.generator(0)
        t = np.linspace(0.0, g.alpha_plus, 101)
        values = [objective_JPsi(scalar_problem, relaxation, [v]) for v in t]
        # curvatura nula dentro do intervalo
        assert oracle_convexity(values, tol=1e-9)
        assert oracle_convexity([-v for v in values], tol=1e-9)
