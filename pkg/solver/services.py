"""Gradiente proximal em J_Psi (ou direto em J_0), passo fixo ou backtracking."""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Union

import numpy as np

from core.conf import brex_setting
from core.exceptions import DomainError, SolverConfigError
from generating.services import brex_value
from prox.services import hard_threshold, prox_vector

logger = logging.getLogger(__name__)

DESCENT_SLACK = 1e-12


class StopReason(str, Enum):
    TOLERANCE = 'tolerance'
    MAX_ITER = 'max_iter'
    DOMAIN_ERROR = 'domain_error'


@dataclass(frozen=True)
class FixedStep:
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise SolverConfigError('fixed step must be positive')


@dataclass(frozen=True)
class Backtracking:
    """Passo inicial rho0 (padrão 2/L), redução e crescimento após aceitação."""
    rho0: Optional[float] = None
    shrink: float = 0.5
    growth: float = 1.25
    sufficient_decrease: float = 1.0
    max_shrinks: int = 60

    def __post_init__(self):
        if not 0.0 < self.shrink < 1.0:
            raise SolverConfigError('backtracking shrink must lie in (0, 1)')
        if self.growth < 1.0:
            raise SolverConfigError('backtracking growth must be >= 1')
        if self.rho0 is not None and not self.rho0 > 0:
            raise SolverConfigError('backtracking rho0 must be positive')
        if not 0.0 < self.sufficient_decrease <= 1.0:
            raise SolverConfigError('sufficient-decrease constant must lie in (0, 1]')


@dataclass(frozen=True)
class SolverConfig:
    step: Union[FixedStep, Backtracking] = field(default_factory=Backtracking)
    max_iter: Optional[int] = None
    rel_tol: Optional[float] = None
    x0: Optional[np.ndarray] = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.max_iter is None:
            object.__setattr__(self, 'max_iter', int(brex_setting('MAX_ITER')))
        if self.rel_tol is None:
            object.__setattr__(self, 'rel_tol', float(brex_setting('REL_TOL')))
        if self.max_iter < 1:
            raise SolverConfigError('max_iter must be at least 1')
        if not self.rel_tol > 0:
            raise SolverConfigError('rel_tol must be positive')

    @classmethod
    def fixed_for(cls, problem, fraction=0.99, **kwargs):
        if not 0.0 < fraction < 1.0:
            raise SolverConfigError('the fixed step fraction of 1/L must lie in (0, 1)')
        return cls(step=FixedStep(fraction / problem.lipschitz()), **kwargs)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    j_psi: float
    j_0: float
    step: float
    delta: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    x_final: np.ndarray
    trace: List[TraceRow]
    stop_reason: StopReason
    iterations: int
    iterates: Optional[List[np.ndarray]] = None
    certificate: Optional[object] = None

    def with_certificate(self, record):
        return replace(self, certificate=record)


def objective_J0(problem, x):
    x = np.asarray(x, dtype=float)
    return problem.smooth_value(x) + problem.lambda0 * float(np.count_nonzero(x))


def objective_JPsi(problem, relaxation, x):
    x = np.asarray(x, dtype=float)
    return problem.smooth_value(x) + brex_value(relaxation, x)


def _backward(problem, relaxation, rho, v):
    if relaxation is None:
        return hard_threshold(v, rho, problem.lambda0, problem.constraint)
    return prox_vector(relaxation, rho, v)


def pga_step(problem, relaxation, rho, x, grad=None):
    """x+ = prox(x - rho grad); `relaxation=None` usa a penalidade l0."""
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad = problem.smooth_grad(x)
    return _backward(problem, relaxation, rho, x - rho * grad)


def _smooth_or_inf(problem, x):
    try:
        return problem.smooth_value(x)
    except DomainError:
        # fora do domínio KL: conta como +inf na busca linear
        return math.inf


def _row(problem, relaxation, k, x, rho, delta):
    j0 = objective_J0(problem, x)
    jpsi = objective_JPsi(problem, relaxation, x) if relaxation is not None else math.nan
    return TraceRow(k, jpsi, j0, rho, delta)


def solve(problem, relaxation=None, config=None):
    config = config or SolverConfig()
    step = config.step
    L = problem.lipschitz()
    if isinstance(step, FixedStep):
        if L > 0 and step.rho >= 1.0 / L:
            raise SolverConfigError(f'fixed step {step.rho:g} must be below 1/L = {1.0 / L:g}')
        rho = rho_max = step.rho
    else:
        rho_max = step.rho0 if step.rho0 is not None else (2.0 / L if L > 0 else 1.0)
        rho = rho_max

    x = problem.project(np.zeros(problem.N) if config.x0 is None else np.asarray(config.x0, dtype=float))
    problem.check_feasible(x)
    trace = []
    iterates = [x.copy()] if config.keep_iterates else None
    penalty = 'l0' if relaxation is None else 'brex'
    logger.info('solve start: penalty=%s N=%d L=%.6g rho=%.6g', penalty, problem.N, L, rho)

    smooth_x = _smooth_or_inf(problem, x)
    if not math.isfinite(smooth_x):
        logger.warning('initial point outside the data-term domain')
        return SolveResult(x, trace, StopReason.DOMAIN_ERROR, 0, iterates)

    stop = StopReason.MAX_ITER
    k = 0
    for k in range(1, config.max_iter + 1):
        grad = problem.smooth_grad(x)
        if isinstance(step, FixedStep):
            x_new = pga_step(problem, relaxation, rho, x, grad)
            smooth_new = _smooth_or_inf(problem, x_new)
            if not math.isfinite(smooth_new):
                stop = StopReason.DOMAIN_ERROR
                break
        else:
            for _ in range(step.max_shrinks):
                x_new = pga_step(problem, relaxation, rho, x, grad)
                d = x_new - x
                smooth_new = _smooth_or_inf(problem, x_new)
                model = smooth_x + float(grad @ d) + step.sufficient_decrease * float(d @ d) / (2.0 * rho)
                if smooth_new <= model + DESCENT_SLACK * max(1.0, abs(smooth_x)):
                    break
                logger.debug('iteration %d: step %.3g rejected', k, rho)
                rho *= step.shrink
            else:
                stop = StopReason.DOMAIN_ERROR
                break

        delta = float(np.linalg.norm(x_new - x))
        scale = max(1.0, float(np.linalg.norm(x)))
        x, smooth_x = x_new, smooth_new
        trace.append(_row(problem, relaxation, k, x, rho, delta))
        if iterates is not None:
            iterates.append(x.copy())
        if delta < config.rel_tol * scale:
            stop = StopReason.TOLERANCE
            break
        if isinstance(step, Backtracking):
            rho = min(rho * step.growth, rho_max)

    iterations = len(trace)
    logger.info(
        'solve stop: %s after %d iterations, J0=%.10g', stop.value, iterations,
        objective_J0(problem, x),
    )
    return SolveResult(x, trace, stop, iterations, iterates)


def stopping_residual(problem, config, result):
    """Resíduo de estacionariedade garantido pelo critério de parada no último passo."""
    if not result.trace:
        return 0.0
    scale = max(1.0, float(np.linalg.norm(result.x_final)))
    return config.rel_tol * scale * (1.0 / result.trace[-1].step + problem.lipschitz())
