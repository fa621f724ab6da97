"""Termos de dados separáveis F_y(z) = sum_m f(z_m; y_m): LS, LR e KL."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import expit, xlogy

from core.exceptions import DimensionError, DomainError

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 200
POWER_RTOL = 1e-10


class FidelityKind(str, Enum):
    LS = 'LS'
    LR = 'LR'
    KL = 'KL'


class Constraint(str, Enum):
    REALS = 'reals'
    NONNEG = 'nonneg'


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def _kl_argument(z, b):
    arg = np.asarray(z, dtype=float) + b
    if np.any(arg <= 0):
        raise DomainError('KL fidelity requires z + b > 0')
    return arg


def f_value(kind, z, y, b=0.0):
    kind = FidelityKind(kind)
    z = np.asarray(z, dtype=float)
    if kind is FidelityKind.LS:
        out = 0.5 * (z - y) ** 2
    elif kind is FidelityKind.LR:
        # max(z,0) - yz + log(1+e^{-|z|}) não transborda para |z| grande
        out = np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))
    else:
        arg = _kl_argument(z, b)
        out = arg - xlogy(y, arg)
    return _scalar_or_array(out)


def f_d1(kind, z, y, b=0.0):
    kind = FidelityKind(kind)
    z = np.asarray(z, dtype=float)
    if kind is FidelityKind.LS:
        out = z - y
    elif kind is FidelityKind.LR:
        out = expit(z) - y
    else:
        out = 1.0 - y / _kl_argument(z, b)
    return _scalar_or_array(out)


def f_d2(kind, z, y, b=0.0):
    kind = FidelityKind(kind)
    z = np.asarray(z, dtype=float)
    if kind is FidelityKind.LS:
        out = np.ones(np.broadcast_shapes(z.shape, np.shape(y)))
    elif kind is FidelityKind.LR:
        s = expit(z)
        out = np.broadcast_to(s * (1.0 - s), np.broadcast_shapes(z.shape, np.shape(y))).copy()
    else:
        out = y / _kl_argument(z, b) ** 2
    return _scalar_or_array(out)


def curvature_sup(kind, y, b=0.0):
    kind = FidelityKind(kind)
    y = np.asarray(y, dtype=float)
    if kind is FidelityKind.LS:
        out = np.ones_like(y)
    elif kind is FidelityKind.LR:
        out = np.full_like(y, 0.25)
    else:
        out = y / b ** 2
    return _scalar_or_array(out)


@dataclass(frozen=True)
class FidelitySpec:
    """Termo de fidelidade com as observações y (e o fundo b no caso KL)."""
    kind: FidelityKind
    y: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', FidelityKind(self.kind))
        y = np.array(self.y, dtype=float)
        if y.ndim != 1 or y.size < 1:
            raise DimensionError('observations must be a non-empty vector')
        if not np.all(np.isfinite(y)):
            raise DomainError('observations must be finite')
        if self.kind is FidelityKind.LR and not np.all((y == 0.0) | (y == 1.0)):
            raise DomainError('logistic observations must be 0 or 1')
        if self.kind is FidelityKind.KL:
            if np.any(y < 0):
                raise DomainError('KL observations must be nonnegative')
            if not self.b > 0:
                raise DomainError('KL fidelity requires a positive background b')
        y.flags.writeable = False
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'b', float(self.b))

    @property
    def M(self):
        return self.y.size

    def value(self, z):
        return float(np.sum(f_value(self.kind, z, self.y, self.b)))

    def d1(self, z):
        return np.asarray(f_d1(self.kind, z, self.y, self.b))

    def d2(self, z):
        return np.asarray(f_d2(self.kind, z, self.y, self.b))

    def curvature_sup(self):
        return np.asarray(curvature_sup(self.kind, self.y, self.b))


def grad_F(spec, A, x):
    """A^T grad F_y(Ax)."""
    return np.asarray(A).T @ spec.d1(np.asarray(A) @ np.asarray(x, dtype=float))


def spectral_norm_sq(A):
    # iteração da potência em A^T A
    A = np.asarray(A, dtype=float)
    if not np.any(A):
        return 0.0
    v = np.random.default_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(POWER_ITERATIONS):
        w = A.T @ (A @ v)
        new_estimate = float(np.linalg.norm(w))
        if new_estimate == 0.0:
            break
        v = w / new_estimate
        if abs(new_estimate - estimate) <= POWER_RTOL * new_estimate:
            estimate = new_estimate
            break
        estimate = new_estimate
    return estimate


def lipschitz_L(spec, A, lambda2=0.0):
    norm_sq = spectral_norm_sq(A)
    if spec.kind is FidelityKind.LS:
        L = norm_sq
    elif spec.kind is FidelityKind.LR:
        L = 0.25 * norm_sq
    else:
        L = norm_sq / spec.b ** 2
    return L + lambda2


@dataclass(frozen=True)
class ProblemSpec:
    """Instância de J_0(x) = F_y(Ax) + lambda0 ||x||_0 + lambda2/2 ||x||^2 sobre C^N."""
    fidelity: FidelitySpec
    A: np.ndarray
    lambda0: float
    lambda2: float = 0.0
    constraint: Constraint = Constraint.REALS
    x_true: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'constraint', Constraint(self.constraint))
        A = np.array(self.A, dtype=float)
        if A.ndim != 2:
            raise DimensionError('A must be a matrix')
        if A.shape[0] != self.fidelity.M:
            raise DimensionError(
                f'A has {A.shape[0]} rows but there are {self.fidelity.M} observations'
            )
        if not np.all(np.isfinite(A)):
            raise DomainError('A must be finite')
        if not self.lambda0 >= 0:
            raise DomainError('lambda0 must be nonnegative')
        if not self.lambda2 >= 0:
            raise DomainError('lambda2 must be nonnegative')
        if self.fidelity.kind is FidelityKind.KL:
            if np.any(A < 0):
                raise DomainError('KL fidelity requires a nonnegative matrix A')
            if self.constraint is not Constraint.NONNEG:
                raise DomainError('KL fidelity requires the nonneg constraint')
        A.flags.writeable = False
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'lambda0', float(self.lambda0))
        object.__setattr__(self, 'lambda2', float(self.lambda2))
        if self.x_true is not None:
            x_true = np.array(self.x_true, dtype=float)
            if x_true.shape != (A.shape[1],):
                raise DimensionError('x_true must have one entry per column of A')
            object.__setattr__(self, 'x_true', x_true)

    @property
    def M(self):
        return self.A.shape[0]

    @property
    def N(self):
        return self.A.shape[1]

    @property
    def nonneg(self):
        return self.constraint is Constraint.NONNEG

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(x, 0.0) if self.nonneg else x

    def check_feasible(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.N,):
            raise DimensionError(f'expected a vector of length {self.N}')
        if self.nonneg and np.any(x < 0):
            raise DomainError('x must be nonnegative')
        return x

    def data_value(self, x):
        return self.fidelity.value(self.A @ x)

    def smooth_value(self, x):
        x = np.asarray(x, dtype=float)
        return self.data_value(x) + 0.5 * self.lambda2 * float(x @ x)

    def smooth_grad(self, x):
        x = np.asarray(x, dtype=float)
        return grad_F(self.fidelity, self.A, x) + self.lambda2 * x

    def lipschitz(self):
        return lipschitz_L(self.fidelity, self.A, self.lambda2)
