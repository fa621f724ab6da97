import math

import numpy as np
import pytest

from core.exceptions import DimensionError, DomainError
from fidelity.services import (
    Constraint, FidelityKind, FidelitySpec, ProblemSpec, curvature_sup, f_d1, f_d2, f_value,
    grad_F, lipschitz_L, spectral_norm_sq,
)
from testoracle.services import finite_difference, numeric_gradient


@pytest.fixture
def ls_problem():
    return ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0, 1.0], [1.0, 3.0]], 0.5)


def _samples(kind, rng, size=2000):
    z = rng.uniform(-5.0, 5.0, size)
    if kind is FidelityKind.LS:
        return z, rng.normal(size=size), 0.0
    if kind is FidelityKind.LR:
        return z, rng.integers(0, 2, size).astype(float), 0.0
    return rng.uniform(0.0, 5.0, size), rng.uniform(0.0, 3.0, size), 0.5


class TestScalarTerms:

    def test_values(self):
        assert f_value('LS', 0.0, 0.0) == 0.0
        assert f_value('LR', 0.0, 1.0) == pytest.approx(math.log(2.0), abs=1e-15)
        assert f_value('KL', 0.9, 1.0, 0.1) == pytest.approx(1.0, abs=1e-15)

    def test_derivatives_at_reference_points(self):
        assert f_d2('LS', 3.7, 1.0) == 1.0
        assert f_d1('LR', 0.0, 0.0) == 0.5
        assert f_d2('KL', 0.0, 1.0, 0.1) == pytest.approx(100.0)

    def test_curvature_sup(self):
        assert curvature_sup('LS', 0.3) == 1.0
        assert curvature_sup('LR', 1.0) == 0.25
        assert curvature_sup('KL', 2.0, 0.1) == pytest.approx(200.0)

    def test_logistic_is_stable_for_large_arguments(self):
        with np.errstate(over='raise'):
            assert f_value('LR', 700.0, 0.0) == pytest.approx(700.0)
            assert f_value('LR', -700.0, 0.0) == pytest.approx(0.0, abs=1e-300)
            assert f_value('LR', 700.0, 1.0) == pytest.approx(0.0, abs=1e-300)
        z = np.linspace(-700, 700, 1001)
        assert np.all(np.asarray(f_value('LR', z, 1.0)) >= 0)
        assert np.all(np.asarray(f_value('LR', z, 0.0)) >= 0)

    def test_kl_domain_error(self):
        with pytest.raises(DomainError):
            f_value('KL', -0.1, 1.0, 0.1)
        with pytest.raises(DomainError):
            f_d1('KL', np.array([0.0, -0.2]), 1.0, 0.1)

    @pytest.mark.parametrize('kind', list(FidelityKind))
    def test_derivatives_match_finite_differences(self, kind):
        z, y, b = _samples(kind, np.random.default_rng(7))
        d1 = np.asarray(f_d1(kind, z, y, b))
        fd1 = finite_difference(lambda t: f_value(kind, t, y, b), z)
        assert np.all(np.abs(d1 - fd1) <= 1e-6 * np.maximum(1.0, np.abs(d1)))
        d2 = np.asarray(f_d2(kind, z, y, b))
        fd2 = finite_difference(lambda t: f_d1(kind, t, y, b), z)
        assert np.all(np.abs(d2 - fd2) <= 1e-5 * np.maximum(1.0, np.abs(d2)))

    @pytest.mark.parametrize('kind', list(FidelityKind))
    def test_curvature_is_bounded_by_sup(self, kind):
        z, y, b = _samples(kind, np.random.default_rng(11))
        assert np.all(np.asarray(f_d2(kind, z, y, b)) <= np.asarray(curvature_sup(kind, y, b)) + 1e-12)


class TestFidelitySpec:

    def test_rejects_bad_observations(self):
        with pytest.raises(DomainError):
            FidelitySpec('LR', [0.0, 0.5])
        with pytest.raises(DomainError):
            FidelitySpec('KL', [-1.0], 0.1)
        with pytest.raises(DomainError):
            FidelitySpec('KL', [1.0], 0.0)
        with pytest.raises(DimensionError):
            FidelitySpec('LS', [])

    def test_observations_are_frozen(self):
        spec = FidelitySpec('LS', [1.0, 2.0])
        with pytest.raises(ValueError):
            spec.y[0] = 3.0


class TestGradientAndLipschitz:

    def test_gradient_reference_values(self, ls_problem):
        g = grad_F(ls_problem.fidelity, ls_problem.A, np.array([0.0, 0.7]))
        np.testing.assert_allclose(g, [-0.8, 0.0], atol=1e-12)
        assert not np.any(grad_F(FidelitySpec('LS', [1.0, -2.0]), np.eye(2), [1.0, -2.0]))
        kl = FidelitySpec('KL', [2.0], 0.5)
        assert grad_F(kl, np.eye(1), [1.5])[0] == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize('kind', list(FidelityKind))
    def test_gradient_matches_finite_differences(self, kind):
        rng = np.random.default_rng(3)
        A = rng.uniform(0.0, 1.0, (6, 4)) if kind is FidelityKind.KL else rng.normal(size=(6, 4))
        _, y, b = _samples(kind, rng, 6)
        spec = FidelitySpec(kind, y, b)
        for _ in range(5):
            x = rng.uniform(0.1, 1.0, 4)
            numeric = numeric_gradient(lambda v: spec.value(A @ v), x)
            np.testing.assert_allclose(grad_F(spec, A, x), numeric, rtol=1e-6, atol=1e-6)

    def test_spectral_norm(self):
        assert spectral_norm_sq(np.eye(3)) == pytest.approx(1.0, rel=1e-9)
        assert spectral_norm_sq([[3.0, 1.0], [1.0, 3.0]]) == pytest.approx(16.0, rel=1e-6)
        assert spectral_norm_sq(np.zeros((2, 2))) == 0.0

    def test_lipschitz_constants(self):
        A = [[3.0, 1.0], [1.0, 3.0]]
        assert lipschitz_L(FidelitySpec('LS', [1.0, 2.0]), A) == pytest.approx(16.0, rel=1e-6)
        assert lipschitz_L(FidelitySpec('LR', [1.0, 0.0]), A, 0.1) == pytest.approx(4.1, rel=1e-6)
        assert lipschitz_L(FidelitySpec('KL', [1.0], 0.1), np.eye(1)) == pytest.approx(100.0)


class TestProblemSpec:

    def test_kl_requires_nonneg_matrix_and_constraint(self):
        kl = FidelitySpec('KL', [1.0, 1.0], 0.1)
        with pytest.raises(DomainError):
            ProblemSpec(kl, [[1.0, -0.1], [0.2, 0.3]], 0.1, constraint=Constraint.NONNEG)
        with pytest.raises(DomainError):
            ProblemSpec(kl, [[1.0, 0.1], [0.2, 0.3]], 0.1)

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[1.0, 2.0, 3.0]], 0.5)

    def test_smooth_value_and_feasibility(self, ls_problem):
        assert ls_problem.smooth_value(np.zeros(2)) == pytest.approx(2.5)
        with pytest.raises(DimensionError):
            ls_problem.check_feasible([1.0])
        nonneg = ProblemSpec(ls_problem.fidelity, ls_problem.A, 0.5, constraint='nonneg')
        with pytest.raises(DomainError):
            nonneg.check_feasible([-1.0, 0.0])
        np.testing.assert_array_equal(nonneg.project([-1.0, 2.0]), [0.0, 2.0])
