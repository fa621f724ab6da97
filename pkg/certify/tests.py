import logging
import math

import numpy as np
import pytest

from calibration.services import calibrate
from certify.services import (
    CertRecord, certify_J0, check_critical_JPsi, check_localmin_J0, check_localmin_JPsi,
    check_preserved, enumerate_minimizers, j0_residual, support_of, threshold_to_J0,
)
from core.exceptions import CombinatorialLimitError
from fidelity.services import FidelitySpec, ProblemSpec


@pytest.fixture
def ls_problem():
    return ProblemSpec(FidelitySpec('LS', [1.0, 2.0]), [[3.0, 1.0], [1.0, 3.0]], 0.5)


@pytest.fixture
def ls_relaxation(ls_problem):
    relaxation, _ = calibrate(ls_problem, 'power')
    return relaxation


@pytest.fixture
def lr_problem():
    return ProblemSpec(FidelitySpec('LR', [1.0, 0.0]), [[-1.0, 2.0], [2.0, 0.2]], 1.0, lambda2=0.1)


@pytest.fixture
def kl_problem():
    fidelity = FidelitySpec('KL', [0.2, 0.2], b=0.1)
    A = [[0.45, 0.8], [0.85, 0.25]]
    return ProblemSpec(fidelity, A, 0.06 * fidelity.value(np.zeros(2)), constraint='nonneg')


class TestJ0Certificates:

    def test_support_of(self):
        assert support_of([0.0, 1.0, 0.0, -2.0]) == (1, 3)
        assert support_of(np.zeros(3)) == ()

    def test_global_minimizer(self, ls_problem):
        x = np.array([0.0, 0.7])
        assert j0_residual(ls_problem, x) == pytest.approx(0.0, abs=1e-12)
        record = certify_J0(ls_problem, x)
        assert record.is_localmin_j0 and record.is_strict
        assert record.is_critical_jpsi is None and record.is_localmin_jpsi is None

    def test_origin_is_always_a_local_minimizer(self, ls_problem, kl_problem):
        assert check_localmin_J0(ls_problem, np.zeros(2))
        assert check_localmin_J0(kl_problem, np.zeros(2))

    def test_not_a_minimizer(self, ls_problem):
        assert not check_localmin_J0(ls_problem, np.array([0.0, 0.5]))
        assert not check_localmin_J0(ProblemSpec(
            ls_problem.fidelity, ls_problem.A, 0.5, constraint='nonneg'), np.array([-0.1, 0.0]),
        )

    def test_rank_deficient_support_is_not_strict(self):
        problem = ProblemSpec(FidelitySpec('LS', [1.0, 1.0]), [[1.0, 1.0], [1.0, 1.0]], 0.1)
        record = certify_J0(problem, np.array([0.5, 0.5]))
        assert record.is_localmin_j0
        assert not record.is_strict

    def test_record_to_dict(self, ls_problem):
        data = certify_J0(ls_problem, np.array([0.0, 0.7])).to_dict()
        assert data['support'] == [1]
        assert data['interval_violations'] == []
        assert data['preserved'] is None


class TestJPsiCertificates:

    def test_global_minimizer_is_a_strict_local_minimizer(self, ls_problem, ls_relaxation):
        ok, residual = check_critical_JPsi(ls_problem, ls_relaxation, [0.0, 0.7])
        assert ok and residual == pytest.approx(0.0, abs=1e-12)
        record = check_localmin_JPsi(ls_problem, ls_relaxation, [0.0, 0.7])
        assert isinstance(record, CertRecord)
        assert record.is_critical_jpsi and record.is_localmin_jpsi
        assert record.is_localmin_j0 and record.is_strict
        assert record.interval_violations == ()

    def test_zero_coordinate_outside_its_interval(self, ls_problem, ls_relaxation):
        ok, residual = check_critical_JPsi(ls_problem, ls_relaxation, [0.5, 0.0])
        assert not ok
        # -s_2 = 4 contra ell^+ = sqrt(10)
        assert residual == pytest.approx(4.0 - math.sqrt(10.0))
        record = check_localmin_JPsi(ls_problem, ls_relaxation, [0.5, 0.0])
        assert record.is_localmin_j0
        assert not record.is_localmin_jpsi

    def test_interior_point_is_flagged(self, ls_problem, ls_relaxation):
        record = check_localmin_JPsi(ls_problem, ls_relaxation, [0.125, 0.625])
        assert record.is_localmin_j0
        assert not record.is_critical_jpsi
        assert record.interval_violations == (0,)

    def test_boundary_hit(self, ls_problem, ls_relaxation):
        alpha = ls_relaxation.alpha_plus_vec[1]
        record = check_localmin_JPsi(ls_problem, ls_relaxation, [0.0, alpha])
        assert record.boundary_hits == (1,)
        assert record.interval_violations == (1,)

    def test_warns_when_relaxation_is_not_exact(self, ls_problem, caplog, monkeypatch):
        monkeypatch.setattr(logging.getLogger('certify'), 'propagate', True)
        relaxation, _ = calibrate(ls_problem, 'power', gamma=1.0)
        with caplog.at_level('WARNING', logger='certify.services'):
            check_localmin_JPsi(ls_problem, relaxation, [0.0, 0.7])
        assert 'not flagged exact' in caplog.text

    def test_preserved(self, ls_problem, ls_relaxation):
        assert check_preserved(ls_problem, ls_relaxation, [0.0, 0.7])
        assert not check_preserved(ls_problem, ls_relaxation, [0.5, 0.0])
        assert not check_preserved(ls_problem, ls_relaxation, [0.125, 0.625])
        assert not check_preserved(ls_problem, ls_relaxation, [0.0, 0.0])

    def test_threshold_to_J0(self, ls_relaxation):
        assert threshold_to_J0(ls_relaxation, [0.1, 0.7]).tolist() == [0.0, 0.7]
        assert threshold_to_J0(ls_relaxation, [-0.1, -0.4]).tolist() == [0.0, -0.4]
        # extremidades ficam
        alpha = ls_relaxation.alpha_plus_vec[0]
        assert threshold_to_J0(ls_relaxation, [alpha, 0.0])[0] == alpha


class TestEnumerate:

    def test_least_squares(self, ls_problem, ls_relaxation):
        found = enumerate_minimizers(ls_problem, relaxation=ls_relaxation)
        assert [m.j0 for m in found] == pytest.approx([0.55, 1.0, 1.75, 2.5])
        assert [m.record.support for m in found] == [(1,), (0, 1), (0,), ()]
        assert found[0].x == pytest.approx([0.0, 0.7])
        assert found[1].x == pytest.approx([0.125, 0.625])
        assert found[2].x == pytest.approx([0.5, 0.0])
        assert [m.record.preserved for m in found] == [True, False, False, False]
        assert all(m.record.is_localmin_j0 for m in found)

    def test_max_support(self, ls_problem):
        found = enumerate_minimizers(ls_problem, max_support=1)
        assert len(found) == 3
        assert all(m.record.preserved is None for m in found)

    def test_logistic(self, lr_problem):
        found = enumerate_minimizers(lr_problem)
        assert len(found) == 4
        assert {m.record.support for m in found} == {(), (0,), (1,), (0, 1)}
        assert all(m.record.is_strict for m in found)
        j0 = [m.j0 for m in found]
        assert j0 == sorted(j0)

    def test_kl(self, kl_problem):
        found = enumerate_minimizers(kl_problem)
        assert len(found) == 4
        for m in found:
            assert np.all(m.x >= 0.0)
            assert np.all(m.x[list(m.record.support)] > 0.0)

    def test_kl_single_column(self):
        problem = ProblemSpec(FidelitySpec('KL', [2.0], b=0.1), [[1.0]], 0.1, constraint='nonneg')
        found = enumerate_minimizers(problem)
        assert sorted(float(m.x[0]) for m in found) == pytest.approx([0.0, 1.9])

    def test_rank_deficient(self):
        problem = ProblemSpec(FidelitySpec('LS', [1.0, 1.0]), [[1.0, 1.0], [1.0, 1.0]], 0.1)
        found = {m.record.support: m for m in enumerate_minimizers(problem)}
        assert not found[(0, 1)].record.is_strict
        assert found[(0,)].record.is_strict

    def test_parallel_matches_serial(self, settings):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((10, 7))
        problem = ProblemSpec(FidelitySpec('LS', rng.standard_normal(10)), A, 0.05)
        settings.BREX = {**settings.BREX, 'THREADS': 4}
        parallel = enumerate_minimizers(problem)
        serial = enumerate_minimizers(problem, max_workers=1)
        assert [m.record.support for m in parallel] == [m.record.support for m in serial]
        assert [m.j0 for m in parallel] == pytest.approx([m.j0 for m in serial])

    def test_limits(self, ls_problem, settings):
        with pytest.raises(CombinatorialLimitError):
            enumerate_minimizers(ls_problem, max_support=3)
        settings.BREX = {**settings.BREX, 'ENUM_LIMIT': 2}
        with pytest.raises(CombinatorialLimitError):
            enumerate_minimizers(ls_problem)
        settings.BREX = {**settings.BREX, 'ENUM_MAX_N': 1}
        with pytest.raises(CombinatorialLimitError):
            enumerate_minimizers(ls_problem, max_support=0)
