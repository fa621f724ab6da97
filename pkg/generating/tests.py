import math

import numpy as np
import pytest

from core.exceptions import ConvergenceError, DomainError
from fidelity.services import Constraint, FidelityKind
from generating.services import (
    FidelityMatchedGenerator, GeneratorKind, KLGenerator, PowerGenerator, RelaxationSpec,
    ShannonGenerator, alpha_bounds, beta_value, bregman_d, brex_value, build_generator,
    ell_bounds, psi_d1, psi_d2, psi_value,
)
from prox.special import lambert_w
from testoracle.services import finite_difference


def all_generators():
    return [
        PowerGenerator(gamma=1.0, lambda0=0.5, p=2.0),
        PowerGenerator(gamma=3.0, lambda0=0.7, p=1.5),
        PowerGenerator(gamma=2.0, lambda0=0.4, p=4.0 / 3.0),
        PowerGenerator(gamma=2.0, lambda0=0.4, p=1.8),
        ShannonGenerator(gamma=2.0, lambda0=1.0),
        KLGenerator(gamma=1.0, lambda0=0.1, y=1.0, b=0.1),
        FidelityMatchedGenerator(
            gamma=1.0, lambda0=0.5, fidelity=FidelityKind.LS, a=(3.0, 1.0), y=(1.0, 2.0),
        ),
        FidelityMatchedGenerator(
            gamma=1.5, lambda0=0.3, fidelity=FidelityKind.LR, a=(0.75, -0.5), y=(1.0, 0.0), lambda2=0.1,
        ),
        FidelityMatchedGenerator(
            gamma=1.0, lambda0=0.2, fidelity=FidelityKind.KL, a=(0.45, 0.85), y=(0.2, 0.2), b=0.1,
        ),
    ]


def interval_points(g, count=50):
    inner = np.linspace(0.0, 1.0, count + 2)[1:-1]
    points = list(inner * g.alpha_plus)
    if not g.nonneg:
        points.extend(inner * g.alpha_minus)
    return np.array(points)


class TestGeneratorValues:

    def test_power_reference_values(self):
        g = PowerGenerator(gamma=1.0, lambda0=0.5, p=2.0)
        assert psi_value(g, 3.0) == pytest.approx(4.5)
        assert psi_d1(g, 3.0) == pytest.approx(3.0)
        assert psi_d2(g, 3.0) == pytest.approx(1.0)

    def test_shannon_and_kl_reference_values(self):
        assert psi_value(ShannonGenerator(gamma=2.0, lambda0=1.0), 1.0) == pytest.approx(0.0, abs=1e-15)
        # limite em 0: x log x -> 0
        assert psi_value(ShannonGenerator(gamma=2.0, lambda0=1.0), 0.0) == pytest.approx(2.0)
        kl = KLGenerator(gamma=1.0, lambda0=0.1, y=1.0, b=0.1)
        assert psi_d1(kl, 0.9) == pytest.approx(0.0, abs=1e-15)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            PowerGenerator(gamma=1.0, lambda0=0.5, p=2.5)
        with pytest.raises(DomainError):
            PowerGenerator(gamma=-1.0, lambda0=0.5)
        with pytest.raises(DomainError):
            psi_value(ShannonGenerator(gamma=1.0, lambda0=1.0), -0.5)

    def test_shannon_and_kl_force_nonneg(self):
        assert ShannonGenerator(gamma=1.0, lambda0=1.0, constraint=Constraint.REALS).nonneg
        assert build_generator(GeneratorKind.KL, 1.0, 0.1, y=1.0, b=0.1).nonneg

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_derivatives_match_finite_differences(self, g):
        x = interval_points(g) + (0.05 if g.nonneg else 0.0)
        d1 = np.asarray(psi_d1(g, x))
        fd1 = finite_difference(lambda t: psi_value(g, t), x)
        assert np.all(np.abs(d1 - fd1) <= 1e-6 * np.maximum(1.0, np.abs(d1)))
        d2 = np.asarray(psi_d2(g, x))
        fd2 = finite_difference(lambda t: psi_d1(g, t), x)
        assert np.all(np.abs(d2 - fd2) <= 1e-5 * np.maximum(1.0, np.abs(d2)))


class TestBregman:

    def test_reference_distances(self):
        power = PowerGenerator(gamma=1.0, lambda0=0.5)
        assert bregman_d(power, 0.0, 0.8) == pytest.approx(0.32)
        shannon = ShannonGenerator(gamma=1.0, lambda0=1.0)
        assert bregman_d(shannon, 0.0, 0.7) == pytest.approx(0.7)

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_nonnegative_and_zero_on_diagonal(self, g):
        z = interval_points(g, 10) + (0.05 if g.nonneg else 0.0)
        for zi in z:
            assert bregman_d(g, zi, zi) == pytest.approx(0.0, abs=1e-12)
            assert np.all(np.asarray(bregman_d(g, z, zi)) >= -1e-12)


class TestSublevelBounds:

    def test_closed_form_endpoints(self):
        assert alpha_bounds(PowerGenerator(gamma=1.0, lambda0=0.5)) == pytest.approx((-1.0, 1.0))
        assert alpha_bounds(ShannonGenerator(gamma=2.0, lambda0=1.0)) == pytest.approx((0.0, 0.5))
        assert alpha_bounds(PowerGenerator(gamma=10.0, lambda0=0.5)) == pytest.approx(
            (-math.sqrt(0.1), math.sqrt(0.1))
        )

    def test_nonneg_power_clips_lower_endpoint(self):
        g = PowerGenerator(gamma=1.0, lambda0=0.5, constraint=Constraint.NONNEG)
        assert g.alpha_minus == 0.0
        assert g.ell_minus == -math.inf

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_endpoints_sit_on_the_lambda0_level(self, g):
        assert bregman_d(g, 0.0, g.alpha_plus) == pytest.approx(g.lambda0, abs=1e-10)
        if not g.nonneg:
            assert bregman_d(g, 0.0, g.alpha_minus) == pytest.approx(g.lambda0, abs=1e-10)
        assert g.alpha_minus <= 0.0 <= g.alpha_plus

    def test_kl_endpoint_formula(self):
        g = KLGenerator(gamma=1.0, lambda0=0.1, y=1.0, b=0.1)
        kappa = 0.1 + math.log(0.1) + 1.0
        expected = -0.1 / lambert_w(0, -0.1 * math.exp(-kappa)) - 0.1
        assert g.alpha_plus == pytest.approx(expected, rel=1e-12)

    def test_ell_bounds(self):
        assert ell_bounds(PowerGenerator(gamma=1.0, lambda0=0.5)) == pytest.approx((-1.0, 1.0))
        lo, hi = ell_bounds(ShannonGenerator(gamma=2.0, lambda0=1.0))
        assert lo == -math.inf and hi == math.inf
        kl = KLGenerator(gamma=1.0, lambda0=0.1, y=1.0, b=0.1)
        lo, hi = ell_bounds(kl)
        assert lo == -math.inf
        assert hi == pytest.approx(psi_d1(kl, kl.alpha_plus) - (1.0 - 1.0 / 0.1))

    def test_fidelity_matched_without_bounded_sublevel(self):
        # logística sem lambda2: d(0, .) fica abaixo de log 2 < lambda0
        with pytest.raises(ConvergenceError):
            FidelityMatchedGenerator(gamma=1.0, lambda0=1.0, fidelity=FidelityKind.LR, a=(1.0,), y=(1.0,))


class TestBeta:

    def test_reference_values(self):
        shannon = ShannonGenerator(gamma=1.0, lambda0=1.0)
        assert beta_value(shannon, 0.5) == pytest.approx(0.5 * (math.log(2.0) + 1.0), rel=1e-12)
        for g in all_generators():
            assert beta_value(g, 0.0) == 0.0
            assert beta_value(g, g.alpha_plus) == pytest.approx(g.lambda0, abs=1e-12)
            assert beta_value(g, 2.0 * g.alpha_plus + 1.0) == g.lambda0
            if not g.nonneg:
                assert beta_value(g, 2.0 * g.alpha_minus - 1.0) == g.lambda0

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_minorizes_l0(self, g):
        lo = 0.0 if g.nonneg else 3.0 * g.alpha_minus
        x = np.linspace(lo, 3.0 * g.alpha_plus, 1001)
        beta = np.asarray(beta_value(g, x))
        assert np.all(beta >= 0.0)
        assert np.all(beta <= g.lambda0 * (x != 0))

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_concave_on_each_piece(self, g):
        rng = np.random.default_rng(1)
        pieces = [(0.0, g.alpha_plus)]
        if not g.nonneg:
            pieces.append((g.alpha_minus, 0.0))
        for lo, hi in pieces:
            a, b = rng.uniform(lo, hi, (2, 200))
            mid = np.asarray(beta_value(g, (a + b) / 2.0))
            chord = (np.asarray(beta_value(g, a)) + np.asarray(beta_value(g, b))) / 2.0
            assert np.all(mid >= chord - 1e-12)

    @pytest.mark.parametrize('g', all_generators(), ids=lambda g: g.kind.value)
    def test_continuous(self, g):
        x = interval_points(g, 30)
        for h in (1e-4, 1e-6, 1e-8):
            gap = np.abs(np.asarray(beta_value(g, x + h)) - np.asarray(beta_value(g, x)))
            assert np.max(gap) < 1e3 * h + 1e-12


class TestRelaxationSpec:

    def test_brex_value(self):
        g = PowerGenerator(gamma=10.0, lambda0=0.5)
        relaxation = RelaxationSpec(0.5, Constraint.REALS, (g, g, None))
        assert brex_value(relaxation, np.zeros(3)) == 0.0
        assert brex_value(relaxation, np.array([1.0, -1.0, 2.0])) == pytest.approx(1.5)
        x = np.array([0.1, 1.0, 0.0])
        assert brex_value(relaxation, x) == pytest.approx(beta_value(g, 0.1) + 0.5)

    def test_from_stacked_matches_per_coordinate(self):
        stacked = PowerGenerator(gamma=np.array([10.0, 4.0]), lambda0=0.5, p=1.5)
        relaxation = RelaxationSpec.from_stacked(stacked, np.array([True, False, True]))
        assert relaxation.generator(1) is None
        assert relaxation.ell_plus_vec[1] == math.inf
        x = np.array([0.05, 0.3, -0.2])
        expected = beta_value(stacked.take(0), 0.05) + 0.5 + beta_value(stacked.take(1), -0.2)
        assert brex_value(relaxation, x) == pytest.approx(expected, rel=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            RelaxationSpec(1.0, Constraint.REALS, (ShannonGenerator(gamma=1.0, lambda0=1.0),))
        with pytest.raises(DomainError):
            RelaxationSpec(0.5, Constraint.REALS, (PowerGenerator(gamma=1.0, lambda0=0.4),))
