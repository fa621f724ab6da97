import math

import numpy as np
import pytest

from core.exceptions import DomainError
from fidelity.services import Constraint
from generating.services import KLGenerator, PowerGenerator, RelaxationSpec, ShannonGenerator
from prox.services import (
    ProxQuery, candidate_set, hard_threshold, prox_beta, prox_family, prox_vector, solution_set,
)
from prox.special import INV_E, cubic_real_roots, depressed_cubic_roots, lambert_w
from testoracle.services import oracle_prox, prox_objective


def oracle_generators():
    return [
        PowerGenerator(gamma=4.0, lambda0=0.5, p=4.0 / 3.0),
        PowerGenerator(gamma=4.0, lambda0=0.5, p=1.5),
        PowerGenerator(gamma=10.0, lambda0=0.5, p=2.0),
        ShannonGenerator(gamma=2.0, lambda0=0.5),
        KLGenerator(gamma=3.0, lambda0=0.5, y=1.0, b=0.5),
    ]


class TestLambertW:

    def test_principal_branch_round_trip(self):
        z = np.concatenate([
            np.linspace(-INV_E, 0.0, 400)[1:-1],
            np.geomspace(1e-10, 1e6, 400),
            -np.geomspace(1e-10, 0.3, 200),
        ])
        w = np.asarray(lambert_w(0, z))
        assert np.all(w >= -1.0 - 1e-9)
        assert np.all(np.abs(w * np.exp(w) - z) <= 1e-13 * np.abs(z))

    def test_lower_branch_round_trip(self):
        z = -np.geomspace(1e-12, INV_E * (1.0 - 1e-9), 1000)
        w = np.asarray(lambert_w(-1, z))
        assert np.all(w <= -1.0 + 1e-9)
        assert np.all(np.abs(w * np.exp(w) - z) <= 1e-13 * np.abs(z))

    def test_known_values(self):
        assert lambert_w(0, 0.0) == 0.0
        assert lambert_w(0, 1.0) == pytest.approx(0.5671432904097838, rel=1e-13)
        assert lambert_w(0, math.e) == pytest.approx(1.0, rel=1e-13)
        assert lambert_w(-1, -0.1) == pytest.approx(-3.577152063957297, rel=1e-13)

    def test_branch_point(self):
        assert lambert_w(0, -INV_E) == pytest.approx(-1.0, abs=1e-6)
        assert lambert_w(-1, -INV_E) == pytest.approx(-1.0, abs=1e-6)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            lambert_w(0, -0.5)
        with pytest.raises(DomainError):
            lambert_w(-1, 0.1)
        with pytest.raises(DomainError):
            lambert_w(1, 0.1)


class TestCubic:

    def test_three_integer_roots(self):
        np.testing.assert_allclose(cubic_real_roots(1.0, -6.0, 11.0, -6.0), [1.0, 2.0, 3.0], atol=1e-12)

    def test_against_companion_matrix(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            roots = np.cumsum(rng.uniform(0.5, 2.0, 3)) - 3.0
            scale = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0])
            coeffs = scale * np.poly(roots)
            expected = np.sort(np.roots(coeffs).real)
            np.testing.assert_allclose(cubic_real_roots(*coeffs), expected, atol=1e-8)

    def test_single_real_root(self):
        roots = cubic_real_roots(1.0, 0.0, 1.0, 1.0)
        assert roots.shape == (1,)
        real = np.roots([1.0, 0.0, 1.0, 1.0])
        assert roots[0] == pytest.approx(real[np.abs(real.imag) < 1e-12].real[0], abs=1e-12)

    def test_depressed_cubic_is_padded_with_nan(self):
        roots = depressed_cubic_roots(np.array([-3.0, 3.0]), np.array([0.0, 0.0]))
        assert roots.shape == (2, 3)
        np.testing.assert_allclose(np.sort(roots[0]), [-math.sqrt(3.0), 0.0, math.sqrt(3.0)], atol=1e-12)
        assert roots[1, 0] == pytest.approx(0.0, abs=1e-15)
        assert np.all(np.isnan(roots[1, 1:]))

    def test_degenerate_leading_coefficient(self):
        with pytest.raises(DomainError):
            cubic_real_roots(0.0, 1.0, 1.0, 1.0)


class TestHardThreshold:

    def test_threshold_point_maps_to_zero(self):
        np.testing.assert_array_equal(hard_threshold([1.0, -1.0, 1.5, -2.0], 0.5, 1.0), [0.0, 0.0, 1.5, -2.0])

    def test_nonneg_projection(self):
        np.testing.assert_array_equal(
            hard_threshold([-3.0, 3.0], 0.5, 1.0, Constraint.NONNEG), [0.0, 3.0],
        )


class TestProx:

    def test_zero_and_negative_inputs(self):
        for g in oracle_generators():
            assert prox_beta(ProxQuery(g, 0.3, 0.0)).value == 0.0
            if g.nonneg:
                assert prox_beta(ProxQuery(g, 0.3, -1.0)).value == 0.0

    def test_query_validation(self):
        g = PowerGenerator(gamma=1.0, lambda0=1.0)
        with pytest.raises(DomainError):
            ProxQuery(g, 0.0, 1.0)
        with pytest.raises(DomainError):
            ProxQuery(g, 1.0, math.inf)

    def test_continuous_regime_quadratic(self):
        # rho*gamma < 1: prox contínuo (soft threshold seguido de reescala)
        g = PowerGenerator(gamma=10.0, lambda0=0.5, p=2.0)
        rho = 0.05
        alpha = g.alpha_plus
        for x in np.linspace(-1.0, 1.0, 41):
            shrunk = max(0.0, (abs(x) - rho * g.gamma * alpha) / (1.0 - rho * g.gamma))
            expected = math.copysign(min(abs(x), shrunk), x)
            assert prox_beta(ProxQuery(g, rho, x)).value == pytest.approx(expected, abs=1e-12)

    def test_large_step_is_hard_threshold(self):
        for g in oracle_generators():
            rho = 2.0 / g.inf_curvature()
            threshold = math.sqrt(2.0 * rho * g.lambda0)
            xs = np.linspace(-3.0 * threshold, 3.0 * threshold, 121)
            xs = xs[np.abs(np.abs(xs) - threshold) > 0.05 * threshold]
            for x in xs:
                expected = hard_threshold(np.array([x]), rho, g.lambda0, g.constraint)[0]
                assert prox_beta(ProxQuery(g, rho, x)).value == expected

    def test_closed_form_never_loses_to_grid_search(self):
        rng = np.random.default_rng(2024)
        for g in oracle_generators():
            curvature = g.inf_curvature()
            for rho in (0.3 / curvature, 3.0 / curvature):
                xs = rng.uniform(0.0 if g.nonneg else -3.0, 3.0, 25) * max(1.0, g.alpha_plus)
                for x in xs:
                    u = prox_beta(ProxQuery(g, rho, x)).value
                    _, best = oracle_prox(g, rho, x)
                    assert float(prox_objective(g, rho, x, u)) <= best + 1e-8

    def test_candidate_set_contains_zero_and_input(self):
        g = PowerGenerator(gamma=4.0, lambda0=0.5, p=1.5)
        q = ProxQuery(g, 0.1, 0.4)
        candidates = candidate_set(q)
        assert 0.0 in candidates and 0.4 in candidates
        assert set(solution_set(q)) <= set(candidates)
        assert prox_beta(q).value in candidates

    def test_family_matches_scalar_queries(self):
        stacked = PowerGenerator(gamma=np.array([2.0, 5.0, 10.0]), lambda0=0.5, p=4.0 / 3.0)
        x = np.array([0.3, -0.8, 1.2])
        out = prox_family(stacked, 0.05, x)
        for n in range(3):
            assert out[n] == pytest.approx(prox_beta(ProxQuery(stacked.take(n), 0.05, x[n])).value, abs=1e-14)

    def test_vector_prox_keeps_l0_on_excluded_coordinates(self):
        g = PowerGenerator(gamma=10.0, lambda0=0.5, p=2.0)
        relaxation = RelaxationSpec(0.5, Constraint.REALS, (g, None))
        out = prox_vector(relaxation, 0.05, np.array([0.25, 0.25]))
        # limiar l0 sqrt(2*0.05*0.5) ~ 0.2236 < 0.25
        assert out[1] == 0.25
        assert out[0] == pytest.approx((0.25 - 0.05 * 10.0 * g.alpha_plus) / 0.5, abs=1e-12)
