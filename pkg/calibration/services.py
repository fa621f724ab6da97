"""Limiares gamma_hat_n por coordenada e a família Psi calibrada.

Condição suficiente de concavidade de J_Psi em (alpha^-, alpha^+):

    inf psi_n'' >= lambda2 + sum_m a_mn^2 sup f''(y_m)
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from core.exceptions import ConvergenceError, DimensionError, DomainError, UnsupportedPairingError
from fidelity.services import FidelityKind, curvature_sup, f_d2
from generating.services import GeneratorKind, RelaxationSpec, build_generator
from prox.special import lambert_w

logger = logging.getLogger(__name__)

MAX_STEPS = 200
BISECT_RTOL = 1e-13


class CalibrationMode(str, Enum):
    AT_THRESHOLD = 'at_threshold'
    STRICT = 'strict'
    MANUAL = 'manual'


@dataclass(frozen=True, eq=False)
class CalibrationReport:
    generator_kind: GeneratorKind
    gamma_thr: np.ndarray
    gamma: np.ndarray
    mode: CalibrationMode
    margin: float
    column_norms: np.ndarray

    @property
    def active(self):
        # coluna nula ou sem curvatura de dados fica de fora
        return self.gamma_thr > 0

    @property
    def exact(self):
        return ~self.active | (self.gamma >= self.gamma_thr)

    @property
    def boundary(self):
        return self.active & np.isclose(self.gamma, self.gamma_thr, rtol=1e-12, atol=0.0)

    @property
    def is_exact(self):
        return bool(np.all(self.exact))

    def to_dict(self):
        return {
            'generator': self.generator_kind.value,
            'mode': self.mode.value,
            'margin': self.margin,
            'gamma_thr': self.gamma_thr.tolist(),
            'gamma': self.gamma.tolist(),
            'exact': self.exact.tolist(),
            'boundary': self.boundary.tolist(),
            'column_norms': self.column_norms.tolist(),
        }


def curvature_rhs(fidelity, A, lambda2, n):
    a = np.asarray(A, dtype=float)[:, n]
    return float(lambda2 + np.sum(a ** 2 * np.asarray(curvature_sup(fidelity.kind, fidelity.y, fidelity.b))))


def _bisect_increasing(h, start=1.0):
    """Menor gamma com h(gamma) >= 0, h não decrescente; bisseção em log(gamma)."""
    lo = hi = float(start)
    if h(start) >= 0:
        for _ in range(MAX_STEPS):
            lo /= 2.0
            if h(lo) < 0:
                break
            hi = lo
        else:
            raise ConvergenceError('threshold bracket not found below the starting point')
    else:
        for _ in range(MAX_STEPS):
            hi *= 2.0
            if h(hi) >= 0:
                break
            lo = hi
        else:
            raise ConvergenceError('threshold bracket not found above the starting point')
    for _ in range(MAX_STEPS):
        if hi / lo - 1.0 <= BISECT_RTOL:
            return hi
        mid = math.sqrt(lo * hi)
        if h(mid) >= 0:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError(f'threshold bisection did not converge in {MAX_STEPS} steps')


def kl_generator_curvature(gamma, lambda0, y, b):
    # gamma y W0(-b e^{-kappa})^2 / b^2
    w = lambert_w(0, -math.exp(-1.0 - lambda0 / (y * gamma)))
    return gamma * y * w * w / b ** 2


def _generator_params(fidelity, generator_kind, p, kl_y, kl_b):
    if generator_kind is GeneratorKind.POWER:
        return {'p': p}
    if generator_kind is GeneratorKind.KL:
        return {'y': kl_y, 'b': _kl_b(fidelity, kl_b)}
    return {}


def _kl_b(fidelity, kl_b):
    if kl_b is not None:
        return kl_b
    return fidelity.b if fidelity.kind is FidelityKind.KL else 1.0


def gamma_threshold(fidelity, generator_kind, A, lambda0, lambda2, n, *, p=2.0, kl_y=1.0, kl_b=None):
    generator_kind = GeneratorKind(generator_kind)
    A = np.asarray(A, dtype=float)
    if not 0 <= n < A.shape[1]:
        raise DimensionError(f'column index {n} out of range')
    if not np.any(A[:, n]):
        return 0.0
    if not lambda0 > 0:
        raise DomainError('calibration requires lambda0 > 0')
    rhs = curvature_rhs(fidelity, A, lambda2, n)
    if rhs <= 0:
        # sem curvatura de dados: côncavo para qualquer gamma
        return 0.0

    if generator_kind is GeneratorKind.POWER:
        if not 1.0 < p <= 2.0:
            raise DomainError(f'power generator requires 1 < p <= 2, got {p}')
        return (p * lambda0) ** ((2.0 - p) / 2.0) * rhs ** (p / 2.0)
    if generator_kind is GeneratorKind.SHANNON:
        return math.sqrt(lambda0 * rhs)
    if generator_kind is GeneratorKind.KL:
        b = _kl_b(fidelity, kl_b)
        return _bisect_increasing(
            lambda g: kl_generator_curvature(g, lambda0, kl_y, b) - rhs,
            start=max(rhs * b * b / kl_y, 1e-12),
        )
    raise UnsupportedPairingError(
        f'no closed-form threshold for {fidelity.kind.value} x {generator_kind.value}'
    )


def generic_threshold(fidelity, generator_kind, A, lambda0, lambda2, n, *,
                      constraint='reals', p=2.0, kl_y=1.0, kl_b=None):
    """Limiar numérico para qualquer gerador, pelo inf psi'' no intervalo de subnível."""
    generator_kind = GeneratorKind(generator_kind)
    A = np.asarray(A, dtype=float)
    column = A[:, n]
    if not np.any(column):
        return 0.0
    rhs = curvature_rhs(fidelity, A, lambda2, n)
    if rhs <= 0:
        return 0.0
    if generator_kind is GeneratorKind.FIDELITY:
        params = {
            'fidelity': fidelity.kind, 'a': column, 'y': fidelity.y,
            'b': fidelity.b, 'lambda2': lambda2,
        }
    else:
        params = _generator_params(fidelity, generator_kind, p, kl_y, kl_b)

    def excess(gamma):
        try:
            g = build_generator(generator_kind, gamma, lambda0, constraint, **params)
        except ConvergenceError:
            # sem intervalo limitado: gamma ainda pequeno demais
            return -math.inf
        return g.inf_curvature() - rhs

    return _bisect_increasing(excess)


def _threshold(problem, generator_kind, n, params):
    try:
        return gamma_threshold(
            problem.fidelity, generator_kind, problem.A, problem.lambda0, problem.lambda2, n,
            p=params.get('p', 2.0), kl_y=params.get('kl_y', 1.0), kl_b=params.get('kl_b'),
        )
    except UnsupportedPairingError:
        return generic_threshold(
            problem.fidelity, generator_kind, problem.A, problem.lambda0, problem.lambda2, n,
            constraint=problem.constraint, p=params.get('p', 2.0),
            kl_y=params.get('kl_y', 1.0), kl_b=params.get('kl_b'),
        )


def calibrate(problem, generator_kind, mode=CalibrationMode.AT_THRESHOLD, margin=0.0, *,
              p=2.0, gamma=None, kl_y=1.0, kl_b=None):
    """Devolve `(relaxation, report)`; um `gamma` explícito vira modo manual."""
    generator_kind = GeneratorKind(generator_kind)
    mode = CalibrationMode(mode)
    if generator_kind in (GeneratorKind.SHANNON, GeneratorKind.KL) and not problem.nonneg:
        raise UnsupportedPairingError(
            f'{generator_kind.value} generator lives on x >= 0; the problem constraint is reals'
        )
    threshold_params = {'p': p, 'kl_y': kl_y, 'kl_b': kl_b}
    gamma_thr = np.array(
        [_threshold(problem, generator_kind, n, threshold_params) for n in range(problem.N)]
    )
    norms = np.sum(problem.A ** 2, axis=0)
    active = gamma_thr > 0

    if gamma is not None:
        mode = CalibrationMode.MANUAL
        gammas = np.array(gamma, dtype=float).reshape(-1)
        if gammas.size == 1:
            gammas = np.full(problem.N, gammas[0])
        if gammas.shape != (problem.N,):
            raise DimensionError(f'expected {problem.N} gamma values, got {gammas.size}')
        if np.any(gammas[active] <= 0):
            raise DomainError('gamma values must be positive')
        gammas = np.where(active, gammas, 0.0)
    elif mode is CalibrationMode.STRICT:
        if margin <= -1.0:
            raise DomainError('strict margin must exceed -1')
        gammas = (1.0 + margin) * gamma_thr
    else:
        gammas = gamma_thr.copy()

    report = CalibrationReport(generator_kind, gamma_thr, gammas, mode, float(margin), norms)
    constraint = problem.constraint
    if not np.any(active):
        relaxation = RelaxationSpec(problem.lambda0, constraint, (None,) * problem.N, report=report)
    elif generator_kind is GeneratorKind.FIDELITY:
        fid = problem.fidelity
        gens = [
            build_generator(
                generator_kind, gammas[n], problem.lambda0, constraint,
                fidelity=fid.kind, a=problem.A[:, n], y=fid.y, b=fid.b, lambda2=problem.lambda2,
            ) if active[n] else None
            for n in range(problem.N)
        ]
        relaxation = RelaxationSpec(problem.lambda0, constraint, tuple(gens), report=report)
    else:
        params = _generator_params(problem.fidelity, generator_kind, p, kl_y, kl_b)
        stacked = build_generator(generator_kind, gammas[active], problem.lambda0, constraint, **params)
        relaxation = RelaxationSpec.from_stacked(stacked, active, report=report)

    logger.info(
        'calibrated %s relaxation (%s): %d coordinates, %d excluded, exact=%s',
        generator_kind.value, mode.value, problem.N, int(np.sum(~active)), report.is_exact,
    )
    return relaxation, report


def concavity_curvature(problem, relaxation, n, x, points=1000):
    g = relaxation.generator(n)
    if g is None:
        return -math.inf
    a = problem.A[:, n]
    base = np.array(x, dtype=float)
    base[n] = 0.0
    z0 = problem.A @ base
    frac = np.linspace(0.0, 1.0, points + 2)[1:-1]
    ts = frac * g.alpha_plus
    if not g.nonneg and g.alpha_minus < 0:
        ts = np.concatenate([frac * g.alpha_minus, ts])
    fid = problem.fidelity
    z = z0[None, :] + np.outer(ts, a)
    data = np.sum(a ** 2 * f_d2(fid.kind, z, fid.y, fid.b), axis=1)
    return float(np.max(data - g.d2(ts) + problem.lambda2))
