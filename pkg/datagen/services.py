"""Instâncias sintéticas de recuperação esparsa para LS, LR e KL."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import expit

from core.conf import brex_setting
from core.exceptions import ProblemFormatError
from fidelity.services import Constraint, FidelityKind, FidelitySpec, ProblemSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DataGenConfig:
    kind: FidelityKind
    M: int
    N: int
    k: int
    eta: float = 0.0
    tau: float = 8.0
    s: float = 1.0
    gain: float = 50.0
    b: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', FidelityKind(self.kind))
        if self.M < 1 or self.N < 1:
            raise ProblemFormatError('M and N must be positive')
        if not 0 <= self.k <= self.N:
            raise ProblemFormatError(f'sparsity k={self.k} must lie in [0, N]')
        if not 0.0 <= self.eta < 1.0:
            raise ProblemFormatError('eta must lie in [0, 1)')
        if self.gain <= 0 or self.b <= 0:
            raise ProblemFormatError('gain and background b must be positive')

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class Instance:
    config: DataGenConfig
    A: np.ndarray
    y: np.ndarray
    x_true: np.ndarray

    @property
    def kind(self):
        return self.config.kind

    def fidelity(self):
        b = self.config.b if self.kind is FidelityKind.KL else 0.0
        return FidelitySpec(self.kind, self.y, b)

    def to_problem(self, lambda0_scale=1.0, lambda2=0.0, lambda0=None):
        # lambda0 = lambda0_scale * F_y(0) quando não informado
        fidelity = self.fidelity()
        if lambda0 is None:
            lambda0 = lambda0_scale * fidelity.value(np.zeros(self.config.M))
        constraint = Constraint.NONNEG if self.kind is FidelityKind.KL else Constraint.REALS
        return ProblemSpec(fidelity, self.A, float(lambda0), float(lambda2), constraint, self.x_true)


def correlated_design(rng, M, N, eta):
    # linhas ~ N(0, Sigma), Sigma_mn = eta^|m-n|; colunas unitárias
    sigma = toeplitz(eta ** np.arange(N))
    factor = cholesky(sigma, lower=True)
    A = rng.standard_normal((M, N)) @ factor.T
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    return A / norms


def gen_ls(config):
    rng = np.random.default_rng(config.seed)
    A = correlated_design(rng, config.M, config.N, config.eta)
    x_true = np.zeros(config.N)
    support = rng.choice(config.N, size=config.k, replace=False)
    signs = np.sign(rng.standard_normal(config.k))
    signs[signs == 0] = 1.0
    x_true[support] = signs
    clean = A @ x_true
    varsigma = float(clean @ clean) * 10.0 ** (-config.tau / 10.0)
    # variância por entrada varsigma/M: ||eps||^2 ~ varsigma, SNR ~ tau
    noise = rng.standard_normal(config.M) * np.sqrt(varsigma / config.M)
    return A, clean + noise, x_true


def equispaced_support(N, k):
    if k == 0:
        return np.zeros(0, dtype=int)
    return np.round(np.arange(k) * N / k).astype(int)


def gen_lr(config):
    rng = np.random.default_rng(config.seed)
    A = correlated_design(rng, config.M, config.N, config.eta)
    x_true = np.zeros(config.N)
    x_true[equispaced_support(config.N, config.k)] = 1.0
    prob = expit(config.s * (A @ x_true))
    y = (rng.random(config.M) < prob).astype(float)
    return A, y, x_true


def gen_kl(config):
    rng = np.random.default_rng(config.seed)
    A = np.abs(rng.standard_normal((config.M, config.N)))
    x_true = np.zeros(config.N)
    support = rng.choice(config.N, size=config.k, replace=False)
    x_true[support] = 1.0 - rng.random(config.k)
    mean = config.gain * (A @ x_true + config.b)
    y = rng.poisson(mean).astype(float) / config.gain
    return A, y, x_true


GENERATORS = {
    FidelityKind.LS: gen_ls,
    FidelityKind.LR: gen_lr,
    FidelityKind.KL: gen_kl,
}


def generate(config):
    A, y, x_true = GENERATORS[config.kind](config)
    return Instance(config, A, y, x_true)


def generate_batch(config, count, max_workers: Optional[int] = None):
    configs = [config.with_seed(config.seed + i) for i in range(count)]
    workers = max(1, max_workers or int(brex_setting('THREADS')))
    if workers == 1 or count < 2:
        return [generate(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(generate, configs))


def recovery_metrics(x_hat, x_true):
    """(F1 do suporte recuperado, RMSE)."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    found = x_hat != 0
    truth = x_true != 0
    total = int(found.sum() + truth.sum())
    f1 = 1.0 if total == 0 else 2.0 * int(np.sum(found & truth)) / total
    rmse = float(np.sqrt(np.mean((x_hat - x_true) ** 2)))
    return f1, rmse
