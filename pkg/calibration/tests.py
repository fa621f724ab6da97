import math

import numpy as np
import pytest

from calibration.services import (
    CalibrationMode, calibrate, concavity_curvature, curvature_rhs, gamma_threshold,
    generic_threshold, kl_generator_curvature,
)
from core.exceptions import DimensionError, DomainError, UnsupportedPairingError
from fidelity.services import FidelitySpec, ProblemSpec
from generating.services import GeneratorKind


@pytest.fixture
def ls_problem():
    return ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0, 1.0], [1.0, 3.0]], 0.5)


@pytest.fixture
def lr_problem():
    return ProblemSpec(FidelitySpec('LR', [1.0, 0.0]), [[-1.0, 2.0], [2.0, 0.2]], 1.0, lambda2=0.1)


@pytest.fixture
def kl_problem():
    fidelity = FidelitySpec('KL', [0.2, 0.2], b=0.1)
    A = [[0.45, 0.8], [0.85, 0.25]]
    return ProblemSpec(fidelity, A, 0.06 * fidelity.value(np.zeros(2)), constraint='nonneg')


def random_fidelity(kind, rng, M):
    if kind == 'LS':
        return FidelitySpec('LS', rng.standard_normal(M))
    if kind == 'LR':
        return FidelitySpec('LR', rng.integers(0, 2, M).astype(float))
    return FidelitySpec('KL', rng.uniform(0.5, 3.0, M), b=0.2)


def random_points(relaxation, rng, count=20):
    x = np.empty((count, relaxation.N))
    for n in range(relaxation.N):
        lo, hi = relaxation.alpha_minus_vec[n], relaxation.alpha_plus_vec[n]
        x[:, n] = rng.uniform(2.0 * lo, 2.0 * hi, count)
    return x


class TestThresholds:

    def test_least_squares_power(self, ls_problem):
        for n in range(2):
            assert gamma_threshold(
                ls_problem.fidelity, 'power', ls_problem.A, 0.5, 0.0, n
            ) == pytest.approx(10.0)

    def test_logistic_power(self, lr_problem):
        thr = [gamma_threshold(lr_problem.fidelity, 'power', lr_problem.A, 1.0, 0.1, n) for n in range(2)]
        assert thr == pytest.approx([1.35, 1.11])

    def test_power_below_two(self, ls_problem):
        thr = gamma_threshold(ls_problem.fidelity, 'power', ls_problem.A, 0.5, 0.0, 0, p=1.5)
        assert thr == pytest.approx(0.75 ** 0.25 * 10.0 ** 0.75)

    def test_entropy(self, ls_problem):
        thr = gamma_threshold(ls_problem.fidelity, 'shannon', ls_problem.A, 0.5, 0.0, 1)
        assert thr == pytest.approx(math.sqrt(5.0))

    def test_kl_generator_reaches_curvature(self, kl_problem):
        for n in range(2):
            rhs = curvature_rhs(kl_problem.fidelity, kl_problem.A, 0.0, n)
            thr = gamma_threshold(kl_problem.fidelity, 'kl', kl_problem.A, kl_problem.lambda0, 0.0, n)
            assert kl_generator_curvature(thr, kl_problem.lambda0, 1.0, 0.1) == pytest.approx(rhs, rel=1e-10)
        assert curvature_rhs(kl_problem.fidelity, kl_problem.A, 0.0, 0) == pytest.approx(18.5)

    def test_zero_column(self):
        fidelity = FidelitySpec('LS', [1.0, 1.0])
        assert gamma_threshold(fidelity, 'power', [[1.0, 0.0], [2.0, 0.0]], 0.5, 0.0, 1) == 0.0
        with pytest.raises(DimensionError):
            gamma_threshold(fidelity, 'power', [[1.0, 0.0], [2.0, 0.0]], 0.5, 0.0, 2)

    def test_lambda0_must_be_positive(self, ls_problem):
        with pytest.raises(DomainError):
            gamma_threshold(ls_problem.fidelity, 'power', ls_problem.A, 0.0, 0.0, 0)

    def test_no_closed_form_for_fidelity_matched(self, ls_problem):
        with pytest.raises(UnsupportedPairingError):
            gamma_threshold(ls_problem.fidelity, 'fidelity', ls_problem.A, 0.5, 0.0, 0)

    @pytest.mark.parametrize('kind,p', [('power', 2.0), ('power', 1.5), ('power', 4.0 / 3.0), ('shannon', 2.0)])
    def test_generic_agrees_with_closed_form(self, lr_problem, kind, p):
        fidelity, A = lr_problem.fidelity, lr_problem.A
        for n in range(2):
            closed = gamma_threshold(fidelity, kind, A, 1.0, 0.1, n, p=p)
            numeric = generic_threshold(fidelity, kind, A, 1.0, 0.1, n, p=p)
            assert numeric == pytest.approx(closed, rel=1e-8)

    def test_generic_kl(self, kl_problem):
        closed = gamma_threshold(kl_problem.fidelity, 'kl', kl_problem.A, kl_problem.lambda0, 0.0, 0)
        numeric = generic_threshold(
            kl_problem.fidelity, 'kl', kl_problem.A, kl_problem.lambda0, 0.0, 0, constraint='nonneg',
        )
        assert numeric == pytest.approx(closed, rel=1e-8)

    @pytest.mark.parametrize('kind', ['power', 'shannon', 'kl'])
    def test_flat_data_curvature_gives_zero_threshold(self, kind):
        # coluna 0 só encontra contagens nulas: f'' = 0 nessas linhas
        fidelity = FidelitySpec('KL', [0.0, 0.0, 1.5], b=0.1)
        A = [[1.0, 0.2], [0.5, 0.3], [0.0, 0.7]]
        assert curvature_rhs(fidelity, A, 0.0, 0) == 0.0
        assert gamma_threshold(fidelity, kind, A, 0.1, 0.0, 0) == 0.0
        assert generic_threshold(fidelity, kind, A, 0.1, 0.0, 0, constraint='nonneg') == 0.0
        assert gamma_threshold(fidelity, kind, A, 0.1, 0.0, 1) > 0.0

    @pytest.mark.parametrize('fidelity_kind', ['LS', 'LR', 'KL'])
    @pytest.mark.parametrize('kind', ['power', 'shannon', 'kl'])
    def test_threshold_grows_with_column_norm_and_lambda2(self, fidelity_kind, kind):
        rng = np.random.default_rng(11)
        fidelity = random_fidelity(fidelity_kind, rng, 6)
        column = rng.uniform(0.1, 1.0, (6, 1))
        by_norm = [gamma_threshold(fidelity, kind, scale * column, 0.3, 0.0, 0) for scale in (0.5, 1.0, 2.0, 4.0)]
        by_lambda2 = [gamma_threshold(fidelity, kind, column, 0.3, lam, 0) for lam in (0.0, 0.1, 1.0, 10.0)]
        assert np.all(np.diff(by_norm) > 0)
        assert np.all(np.diff(by_lambda2) > 0)

    @pytest.mark.parametrize('fidelity_kind', ['LS', 'LR', 'KL'])
    @pytest.mark.parametrize('kind,p', [('power', 2.0), ('power', 1.5), ('shannon', 2.0), ('kl', 2.0)])
    def test_generic_agrees_on_random_instances(self, fidelity_kind, kind, p):
        rng = np.random.default_rng(5)
        constraint = 'reals' if kind == 'power' else 'nonneg'
        for _ in range(3):
            fidelity = random_fidelity(fidelity_kind, rng, 5)
            A = rng.uniform(0.1, 1.0, (5, 3))
            lambda0, lambda2 = rng.uniform(0.05, 1.0), rng.choice([0.0, 0.2])
            for n in range(3):
                closed = gamma_threshold(fidelity, kind, A, lambda0, lambda2, n, p=p)
                numeric = generic_threshold(fidelity, kind, A, lambda0, lambda2, n, constraint=constraint, p=p)
                assert numeric == pytest.approx(closed, rel=1e-8)


class TestCalibrate:

    def test_at_threshold(self, ls_problem):
        relaxation, report = calibrate(ls_problem, 'power')
        assert report.mode is CalibrationMode.AT_THRESHOLD
        assert report.gamma == pytest.approx([10.0, 10.0])
        assert report.is_exact
        assert report.boundary.tolist() == [True, True]
        assert relaxation.alpha_plus_vec == pytest.approx([math.sqrt(0.1)] * 2)
        assert relaxation.ell_plus_vec == pytest.approx([math.sqrt(10.0)] * 2)

    def test_strict_margin(self, ls_problem):
        _, at = calibrate(ls_problem, 'power')
        _, zero = calibrate(ls_problem, 'power', 'strict', 0.0)
        np.testing.assert_array_equal(zero.gamma, at.gamma)
        _, strict = calibrate(ls_problem, 'power', 'strict', 0.5)
        assert strict.gamma == pytest.approx([15.0, 15.0])
        assert strict.is_exact
        assert not strict.boundary.any()
        with pytest.raises(DomainError):
            calibrate(ls_problem, 'power', 'strict', -1.0)

    def test_manual_gamma(self, ls_problem):
        _, low = calibrate(ls_problem, 'power', gamma=[5.0, 20.0])
        assert low.mode is CalibrationMode.MANUAL
        assert low.exact.tolist() == [False, True]
        assert not low.is_exact
        _, high = calibrate(ls_problem, 'power', gamma=20.0)
        assert high.is_exact
        with pytest.raises(DimensionError):
            calibrate(ls_problem, 'power', gamma=[1.0, 2.0, 3.0])
        with pytest.raises(DomainError):
            calibrate(ls_problem, 'power', gamma=[-1.0, 2.0])

    def test_zero_column_is_excluded(self):
        problem = ProblemSpec(FidelitySpec('LS', [1.0, 1.0]), [[1.0, 0.0], [2.0, 0.0]], 0.5)
        relaxation, report = calibrate(problem, 'power')
        assert report.gamma_thr.tolist() == [5.0, 0.0]
        assert report.active.tolist() == [True, False]
        assert report.exact.tolist() == [True, True]
        assert relaxation.generator(1) is None

    def test_all_columns_zero(self):
        problem = ProblemSpec(FidelitySpec('LS', [1.0]), [[0.0, 0.0]], 0.5)
        relaxation, report = calibrate(problem, 'power')
        assert relaxation.generators == (None, None)
        assert report.is_exact

    @pytest.mark.parametrize('kind', ['power', 'shannon', 'kl'])
    def test_flat_data_curvature_column_is_excluded(self, kind):
        fidelity = FidelitySpec('KL', [0.0, 0.0, 1.5], b=0.1)
        problem = ProblemSpec(fidelity, [[1.0, 0.2], [0.5, 0.3], [0.0, 0.7]], 0.1, constraint='nonneg')
        relaxation, report = calibrate(problem, kind)
        assert report.gamma_thr[0] == 0.0
        assert report.active.tolist() == [False, True]
        assert report.is_exact
        assert relaxation.generator(0) is None
        assert relaxation.beta_vector(np.array([0.3, 0.0]))[0] == pytest.approx(0.1)

    def test_entropy_requires_nonneg(self, ls_problem):
        with pytest.raises(UnsupportedPairingError):
            calibrate(ls_problem, 'shannon')
        with pytest.raises(UnsupportedPairingError):
            calibrate(ls_problem, 'kl')
        nonneg = ProblemSpec(ls_problem.fidelity, ls_problem.A, 0.5, constraint='nonneg')
        relaxation, report = calibrate(nonneg, 'shannon')
        assert relaxation.kind is GeneratorKind.SHANNON
        assert report.gamma == pytest.approx([math.sqrt(5.0)] * 2)

    def test_fidelity_matched_falls_back_to_numeric(self, ls_problem):
        relaxation, report = calibrate(ls_problem, 'fidelity')
        # psi'' = gamma ||a_n||^2 é constante: limiar exato em gamma = 1
        assert report.gamma_thr == pytest.approx([1.0, 1.0], rel=1e-10)
        assert relaxation.kind is GeneratorKind.FIDELITY

    def test_report_to_dict(self, lr_problem):
        _, report = calibrate(lr_problem, 'power')
        data = report.to_dict()
        assert data['generator'] == 'power'
        assert data['mode'] == 'at_threshold'
        assert data['gamma_thr'] == pytest.approx([1.35, 1.11])
        assert data['exact'] == [True, True]


class TestConcavity:

    @pytest.mark.parametrize('name', ['ls_problem', 'lr_problem', 'kl_problem'])
    @pytest.mark.parametrize('kind', ['power', 'fidelity'])
    def test_calibrated_relaxation_is_concave_along_coordinates(self, request, name, kind):
        problem = request.getfixturevalue(name)
        if kind == 'power' and problem.nonneg:
            kind = 'kl'
        relaxation, _ = calibrate(problem, kind)
        rng = np.random.default_rng(7)
        for x in problem.project(random_points(relaxation, rng)):
            for n in range(problem.N):
                assert concavity_curvature(problem, relaxation, n, x) <= 1e-8

    def test_strict_margin_is_strictly_concave(self, lr_problem):
        relaxation, _ = calibrate(lr_problem, 'power', 'strict', 0.1)
        x = np.array([0.3, -0.2])
        for n in range(2):
            assert concavity_curvature(lr_problem, relaxation, n, x) < 0.0

    def test_below_threshold_loses_concavity(self, ls_problem):
        relaxation, _ = calibrate(ls_problem, 'power', gamma=5.0)
        assert concavity_curvature(ls_problem, relaxation, 0, np.zeros(2)) == pytest.approx(5.0)
