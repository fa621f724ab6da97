import numpy as np
import pytest

from core.services import build_relaxation, landscape
from fidelity.services import FidelitySpec, ProblemSpec


def lr_problem():
    return ProblemSpec(FidelitySpec('LR', [1.0, 0.0]), [[-1.0, 2.0], [2.0, 0.2]], 1.0, lambda2=0.1)


def kl_problem():
    fidelity = FidelitySpec('KL', [0.2, 0.2], b=0.1)
    A = [[0.45, 0.8], [0.85, 0.25]]
    return ProblemSpec(fidelity, A, 0.06 * fidelity.value(np.zeros(2)), constraint='nonneg')


class TestLandscapeArgmin:

    @pytest.mark.parametrize('make,psi', [
        (lr_problem, 'power:2'),
        (lr_problem, 'power:3/2'),
        (kl_problem, 'power:2'),
        (kl_problem, 'shannon'),
        (kl_problem, 'kl'),
    ])
    def test_relaxed_grid_minimum_is_the_global_minimizer(self, make, psi):
        problem = make()
        relaxation, _ = build_relaxation(problem, psi, 'thr')
        grid = landscape(problem, relaxation, points=201)
        assert len(grid.minimizers) == 4

        best = min(grid.minimizers, key=lambda m: m.j0)
        rows = grid.rows
        argmin = rows[np.argmin(rows[:, 3]), :2]
        spacing = float(np.max(np.diff(np.unique(rows[:, 0]))))
        np.testing.assert_allclose(argmin, best.x, atol=max(1e-3, spacing))
        # o mínimo de J_Psi na grade é o mínimo global de J_0
        assert rows[:, 3].min() == pytest.approx(best.j0, abs=1e-9)
        assert np.all(rows[:, 3] <= rows[:, 2] + 1e-9)
