import math

import numpy as np
import pytest

from core.exceptions import ProblemFormatError
from datagen.services import (
    DataGenConfig, correlated_design, equispaced_support, generate, generate_batch, recovery_metrics,
)
from fidelity.services import Constraint, FidelityKind


class TestConfig:

    @pytest.mark.parametrize('kwargs', [
        {'M': 0, 'N': 5, 'k': 1},
        {'M': 5, 'N': 5, 'k': 6},
        {'M': 5, 'N': 5, 'k': 1, 'eta': 1.0},
        {'M': 5, 'N': 5, 'k': 1, 'gain': 0.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ProblemFormatError):
            DataGenConfig('LS', **kwargs)

    def test_kind_is_coerced(self):
        assert DataGenConfig('KL', 4, 6, 2).kind is FidelityKind.KL


class TestDesign:

    def test_unit_columns(self):
        A = correlated_design(np.random.default_rng(0), 30, 12, 0.9)
        assert np.linalg.norm(A, axis=0) == pytest.approx(np.ones(12))

    def test_correlation_between_neighbours(self):
        A = correlated_design(np.random.default_rng(0), 20000, 3, 0.9)
        gram = A.T @ A
        assert gram[0, 1] == pytest.approx(0.9, abs=0.02)
        assert gram[0, 2] == pytest.approx(0.81, abs=0.02)

    def test_uncorrelated(self):
        A = correlated_design(np.random.default_rng(1), 20000, 3, 0.0)
        gram = A.T @ A
        assert abs(gram[0, 1]) < 0.03

    def test_equispaced_support(self):
        assert equispaced_support(10, 3).tolist() == [0, 3, 7]
        assert equispaced_support(10, 0).tolist() == []
        assert equispaced_support(4, 4).tolist() == [0, 1, 2, 3]


class TestGenerate:

    @pytest.mark.parametrize('kind', ['LS', 'LR', 'KL'])
    def test_deterministic(self, kind):
        config = DataGenConfig(kind, 15, 20, 4, eta=0.5, seed=42)
        first, second = generate(config), generate(config)
        np.testing.assert_array_equal(first.A, second.A)
        np.testing.assert_array_equal(first.y, second.y)
        np.testing.assert_array_equal(first.x_true, second.x_true)
        other = generate(config.with_seed(43))
        assert not np.array_equal(first.A, other.A)

    def test_least_squares(self):
        instance = generate(DataGenConfig('LS', 4000, 50, 10, eta=0.5, tau=8.0, seed=3))
        x = instance.x_true
        assert np.count_nonzero(x) == 10
        assert set(np.abs(x[x != 0])) == {1.0}
        clean = instance.A @ x
        noise = instance.y - clean
        snr = 10.0 * math.log10(float(clean @ clean) / float(noise @ noise))
        assert snr == pytest.approx(8.0, abs=0.5)

    def test_logistic(self):
        instance = generate(DataGenConfig('LR', 200, 30, 3, s=2.0, seed=5))
        assert set(np.unique(instance.y)) <= {0.0, 1.0}
        assert np.flatnonzero(instance.x_true).tolist() == [0, 10, 20]
        assert np.all(instance.x_true[instance.x_true != 0] == 1.0)

    def test_kl(self):
        config = DataGenConfig('KL', 3000, 10, 3, gain=500.0, b=0.1, seed=9)
        instance = generate(config)
        assert np.all(instance.A >= 0)
        assert np.all(instance.y >= 0)
        counts = instance.y * config.gain
        assert counts == pytest.approx(np.round(counts))
        nonzero = instance.x_true[instance.x_true != 0]
        assert nonzero.size == 3
        assert np.all((nonzero > 0) & (nonzero <= 1.0))
        mean = instance.A @ instance.x_true + config.b
        assert np.mean(instance.y) == pytest.approx(np.mean(mean), rel=0.02)

    def test_to_problem(self):
        ls = generate(DataGenConfig('LS', 8, 12, 2, seed=1)).to_problem(lambda0_scale=0.01, lambda2=0.5)
        assert ls.lambda0 == pytest.approx(0.01 * 0.5 * float(ls.fidelity.y @ ls.fidelity.y))
        assert ls.lambda2 == 0.5
        assert ls.constraint is Constraint.REALS
        assert ls.x_true is not None
        kl = generate(DataGenConfig('KL', 8, 12, 2, seed=1)).to_problem(lambda0=0.3)
        assert kl.lambda0 == 0.3
        assert kl.constraint is Constraint.NONNEG
        assert kl.fidelity.b == 0.1

    def test_batch_seeds(self):
        config = DataGenConfig('LS', 10, 12, 2, seed=100)
        batch = generate_batch(config, 4, max_workers=2)
        assert [instance.config.seed for instance in batch] == [100, 101, 102, 103]
        np.testing.assert_array_equal(batch[2].A, generate(config.with_seed(102)).A)
        serial = generate_batch(config, 4, max_workers=1)
        np.testing.assert_array_equal(batch[3].y, serial[3].y)


class TestRecoveryMetrics:

    def test_partial_recovery(self):
        f1, rmse = recovery_metrics([1.0, 0.0, 2.0], [1.0, 1.0, 0.0])
        assert f1 == 0.5
        assert rmse == pytest.approx(math.sqrt(5.0 / 3.0))

    def test_exact_and_empty(self):
        assert recovery_metrics([0.5, 0.0], [0.5, 0.0]) == (1.0, 0.0)
        assert recovery_metrics([0.0, 0.0], [0.0, 0.0]) == (1.0, 0.0)
        assert recovery_metrics([0.0, 0.0], [1.0, 0.0])[0] == 0.0
