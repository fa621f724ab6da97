"""Geradores psi_n, distâncias de Bregman e a penalidade beta em uma dimensão.

alpha^- <= 0 <= alpha^+ delimitam {z : d(0, z) <= lambda0}; são calculados em
`__post_init__`, assim como ell^+-. Os geradores fechados aceitam parâmetros vetoriais
(um por coordenada).
"""
import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from core.exceptions import ConvergenceError, DomainError
from fidelity.services import Constraint, FidelityKind, f_d1, f_d2, f_value
from prox.special import lambert_w

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 200


class GeneratorKind(str, Enum):
    POWER = 'power'
    SHANNON = 'shannon'
    KL = 'kl'
    FIDELITY = 'fidelity'


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def _as_param(value, name, positive=True):
    arr = np.array(value, dtype=float)
    if not np.all(np.isfinite(arr)) or (positive and np.any(arr <= 0)):
        raise DomainError(f'{name} must be positive and finite')
    if arr.ndim == 0:
        return float(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """psi_n = gamma * psi com os limites derivados alpha^+- e ell^+-."""
    gamma: float
    lambda0: float
    constraint: Constraint = Constraint.REALS
    alpha_minus: float = field(init=False, default=0.0)
    alpha_plus: float = field(init=False, default=0.0)
    ell_minus: float = field(init=False, default=0.0)
    ell_plus: float = field(init=False, default=0.0)
    d1_alpha_minus: float = field(init=False, default=0.0, repr=False)
    d1_alpha_plus: float = field(init=False, default=0.0, repr=False)
    psi_zero: float = field(init=False, default=0.0, repr=False)

    kind = None
    stacked_fields = ('gamma',)

    def __post_init__(self):
        object.__setattr__(self, 'gamma', _as_param(self.gamma, 'gamma'))
        object.__setattr__(self, 'lambda0', float(_as_param(self.lambda0, 'lambda0')))
        object.__setattr__(self, 'constraint', Constraint(self.constraint))
        self._setup()

        alpha_minus, alpha_plus = self._sublevel_bounds()
        zeros = np.zeros(np.shape(alpha_plus))
        with np.errstate(divide='ignore', invalid='ignore'):
            d1_zero = np.asarray(self.d1(zeros), dtype=float)
            d1_plus = np.asarray(self.d1(alpha_plus), dtype=float)
            if self.nonneg:
                d1_minus = np.full(np.shape(alpha_plus), np.nan)
                ell_minus = np.full(np.shape(alpha_plus), -np.inf)
            else:
                d1_minus = np.asarray(self.d1(alpha_minus), dtype=float)
                ell_minus = d1_minus - d1_zero
            # psi'(0) = -inf (entropia): inclinação infinita de beta em 0+
            ell_plus = np.where(np.isneginf(d1_zero), np.inf, d1_plus - d1_zero)

        for name, value in (
            ('alpha_minus', alpha_minus),
            ('alpha_plus', alpha_plus),
            ('ell_minus', ell_minus),
            ('ell_plus', ell_plus),
            ('d1_alpha_minus', d1_minus),
            ('d1_alpha_plus', d1_plus),
            ('psi_zero', self.value(zeros)),
        ):
            object.__setattr__(self, name, _scalar_or_array(np.asarray(value, dtype=float)))

    # subclasses
    def _setup(self):
        pass

    def _sublevel_bounds(self):
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    @property
    def nonneg(self):
        return self.constraint is Constraint.NONNEG

    @property
    def is_stacked(self):
        return np.ndim(self.gamma) > 0

    def _domain(self, x):
        x = np.asarray(x, dtype=float)
        if self.nonneg and np.any(x < 0):
            raise DomainError(f'{self.kind.value} generator is defined on x >= 0 only')
        return x

    def _force_nonneg(self):
        object.__setattr__(self, 'constraint', Constraint.NONNEG)

    def bregman(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return _scalar_or_array(self.value(x) - self.value(z) - self.d1(z) * (x - z))

    def beta(self, x):
        # psi(0) - psi(x) + psi'(alpha^+-) x dentro de [alpha^-, alpha^+], lambda0 fora
        x = self._domain(x)
        inside = ((x >= 0) & (x < self.alpha_plus)) | ((x < 0) & (x > self.alpha_minus))
        safe = np.where(inside, x, 0.0)
        with np.errstate(invalid='ignore'):
            slope = np.where(x < 0, self.d1_alpha_minus, self.d1_alpha_plus)
            inner = self.psi_zero - np.asarray(self.value(safe)) + slope * safe
        out = np.where(inside, inner, self.lambda0)
        return _scalar_or_array(np.clip(out, 0.0, self.lambda0))

    def inf_curvature(self, samples=64):
        """inf psi'' em (alpha^-, 0) U (0, alpha^+)."""
        if self.is_stacked:
            raise ValueError('inf_curvature expects a single-coordinate generator')
        points = [self.alpha_plus] if np.isfinite(self.alpha_plus) else []
        frac = np.linspace(0.0, 1.0, samples + 2)[1:-1]
        if np.isfinite(self.alpha_plus) and self.alpha_plus > 0:
            points.extend(frac * self.alpha_plus)
        if not self.nonneg and self.alpha_minus < 0:
            if np.isfinite(self.alpha_minus):
                points.append(self.alpha_minus)
                points.extend(frac * self.alpha_minus)
        if not points:
            return 0.0
        with np.errstate(divide='ignore'):
            return float(np.min(self.d2(np.array(points))))

    def take(self, index):
        if not self.is_stacked:
            return self
        changes = {}
        for name in self.stacked_fields:
            value = getattr(self, name)
            if np.ndim(value) > 0:
                changes[name] = float(value[index])
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PowerGenerator(GeneratorSpec):
    p: float = 2.0

    kind = GeneratorKind.POWER

    def _setup(self):
        if not 1.0 < self.p <= 2.0:
            raise DomainError(f'power generator requires 1 < p <= 2, got {self.p}')
        object.__setattr__(self, 'p', float(self.p))

    def _sublevel_bounds(self):
        a = (self.p * self.lambda0 / np.asarray(self.gamma)) ** (1.0 / self.p)
        return (np.zeros_like(a) if self.nonneg else -a), a

    def value(self, x):
        x = self._domain(x)
        p = self.p
        return _scalar_or_array(self.gamma * np.abs(x) ** p / (p * (p - 1.0)))

    def d1(self, x):
        x = self._domain(x)
        p = self.p
        return _scalar_or_array(self.gamma * np.sign(x) * np.abs(x) ** (p - 1.0) / (p - 1.0))

    def d2(self, x):
        x = self._domain(x)
        with np.errstate(divide='ignore'):
            return _scalar_or_array(self.gamma * np.abs(x) ** (self.p - 2.0))


@dataclass(frozen=True, eq=False)
class ShannonGenerator(GeneratorSpec):
    kind = GeneratorKind.SHANNON

    def _setup(self):
        self._force_nonneg()

    def _sublevel_bounds(self):
        a = self.lambda0 / np.asarray(self.gamma)
        return np.zeros_like(a), a

    def value(self, x):
        x = self._domain(x)
        return _scalar_or_array(self.gamma * (xlogy(x, x) - x + 1.0))

    def d1(self, x):
        x = self._domain(x)
        with np.errstate(divide='ignore'):
            return _scalar_or_array(self.gamma * np.log(x))

    def d2(self, x):
        x = self._domain(x)
        with np.errstate(divide='ignore'):
            return _scalar_or_array(self.gamma / x)


@dataclass(frozen=True, eq=False)
class KLGenerator(GeneratorSpec):
    y: float = 1.0
    b: float = 0.1

    kind = GeneratorKind.KL
    stacked_fields = ('gamma', 'y', 'b')

    def _setup(self):
        self._force_nonneg()
        object.__setattr__(self, 'y', _as_param(self.y, 'y'))
        object.__setattr__(self, 'b', _as_param(self.b, 'b'))

    def _sublevel_bounds(self):
        kappa_excess = self.lambda0 / (np.asarray(self.y) * np.asarray(self.gamma))
        # -b e^{-kappa} com kappa = lambda0/(y gamma) + log b + 1
        w = np.asarray(lambert_w(0, -np.exp(-1.0 - kappa_excess)))
        with np.errstate(divide='ignore'):
            a = np.where(w == 0.0, np.inf, -np.asarray(self.b) / w - np.asarray(self.b))
        return np.zeros_like(a), a

    def _domain(self, x):
        x = super()._domain(x)
        if np.any(x + self.b <= 0):
            raise DomainError('KL generator requires x + b > 0')
        return x

    def value(self, x):
        x = self._domain(x)
        return _scalar_or_array(self.gamma * (x + self.b - self.y * np.log(x + self.b)))

    def d1(self, x):
        x = self._domain(x)
        return _scalar_or_array(self.gamma * (1.0 - self.y / (x + self.b)))

    def d2(self, x):
        x = self._domain(x)
        return _scalar_or_array(self.gamma * self.y / (x + self.b) ** 2)


@dataclass(frozen=True, eq=False)
class FidelityMatchedGenerator(GeneratorSpec):
    """gamma (sum_m f(a_m x; y_m) + lambda2/2 x^2): o termo de dados ao longo de uma coluna."""
    fidelity: FidelityKind = FidelityKind.LS
    a: Tuple[float, ...] = (1.0,)
    y: Tuple[float, ...] = (0.0,)
    b: float = 0.0
    lambda2: float = 0.0

    kind = GeneratorKind.FIDELITY
    stacked_fields = ()

    def _setup(self):
        if self.is_stacked:
            raise DomainError('fidelity-matched generators are built one coordinate at a time')
        object.__setattr__(self, 'fidelity', FidelityKind(self.fidelity))
        a = np.atleast_1d(np.array(self.a, dtype=float))
        y = np.atleast_1d(np.array(self.y, dtype=float))
        if a.shape != y.shape or a.ndim != 1:
            raise DomainError('column and observations must have the same length')
        if not np.any(a) and self.lambda2 <= 0:
            raise DomainError('fidelity-matched generator needs a nonzero column or lambda2 > 0')
        if self.fidelity is FidelityKind.KL:
            self._force_nonneg()
            if np.any(a < 0) or self.b <= 0:
                raise DomainError('KL fidelity-matched generator needs a >= 0 and b > 0')
        a.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'y', y)

    def _column(self, x):
        x = self._domain(x)
        return x, np.multiply.outer(x, self.a)

    def value(self, x):
        x, z = self._column(x)
        data = np.sum(f_value(self.fidelity, z, self.y, self.b), axis=-1)
        return _scalar_or_array(self.gamma * (data + 0.5 * self.lambda2 * x ** 2))

    def d1(self, x):
        x, z = self._column(x)
        data = np.sum(self.a * f_d1(self.fidelity, z, self.y, self.b), axis=-1)
        return _scalar_or_array(self.gamma * (data + self.lambda2 * x))

    def d2(self, x):
        x, z = self._column(x)
        data = np.sum(self.a ** 2 * f_d2(self.fidelity, z, self.y, self.b), axis=-1)
        return _scalar_or_array(self.gamma * (data + self.lambda2))

    def _root(self, sign):
        def excess(t):
            return self.bregman(0.0, t) - self.lambda0

        hi = sign * min(1.0, self.lambda0 / self.gamma)
        for _ in range(MAX_DOUBLINGS):
            if excess(hi) > 0:
                break
            hi *= 2.0
        else:
            raise ConvergenceError(
                'could not bracket the lambda0-sublevel endpoint of the generator'
            )
        lo, hi = sorted((0.0, hi))
        return brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    def _sublevel_bounds(self):
        alpha_plus = self._root(1.0)
        alpha_minus = 0.0 if self.nonneg else self._root(-1.0)
        return alpha_minus, alpha_plus


GENERATOR_CLASSES = {
    GeneratorKind.POWER: PowerGenerator,
    GeneratorKind.SHANNON: ShannonGenerator,
    GeneratorKind.KL: KLGenerator,
    GeneratorKind.FIDELITY: FidelityMatchedGenerator,
}


def build_generator(kind, gamma, lambda0, constraint=Constraint.REALS, **params):
    return GENERATOR_CLASSES[GeneratorKind(kind)](gamma, lambda0, constraint, **params)


def psi_value(g, x):
    return g.value(x)


def psi_d1(g, x):
    return g.d1(x)


def psi_d2(g, x):
    return g.d2(x)


def bregman_d(g, x, z):
    return g.bregman(x, z)


def alpha_bounds(g):
    return g.alpha_minus, g.alpha_plus


def beta_value(g, x):
    return g.beta(x)


def ell_bounds(g):
    return g.ell_minus, g.ell_plus


@dataclass(frozen=True, eq=False)
class RelaxationSpec:
    """Família Psi por coordenada; `None` mantém lambda0 |x_n|_0 (coluna nula)."""
    lambda0: float
    constraint: Constraint
    generators: Tuple[Optional[GeneratorSpec], ...]
    stacked: Optional[GeneratorSpec] = None
    report: Optional[object] = None

    def __post_init__(self):
        object.__setattr__(self, 'constraint', Constraint(self.constraint))
        object.__setattr__(self, 'generators', tuple(self.generators))
        for g in self.generators:
            if g is None:
                continue
            if g.is_stacked:
                raise DomainError('relaxation generators must be single-coordinate')
            if abs(g.lambda0 - self.lambda0) > 1e-12 * max(1.0, self.lambda0):
                raise DomainError('all generators must share the relaxation lambda0')
            if g.nonneg and self.constraint is not Constraint.NONNEG:
                raise DomainError(f'{g.kind.value} generator needs the nonneg constraint')
        active = np.array([g is not None for g in self.generators], dtype=bool)
        active.flags.writeable = False
        object.__setattr__(self, 'active', active)

        def collect(name, fallback):
            return np.array(
                [fallback if g is None else getattr(g, name) for g in self.generators],
                dtype=float,
            )

        for name, fallback in (
            ('alpha_minus', 0.0), ('alpha_plus', 0.0),
            ('ell_minus', -np.inf), ('ell_plus', np.inf),
        ):
            arr = collect(name, fallback)
            arr.flags.writeable = False
            object.__setattr__(self, f'{name}_vec', arr)

    @classmethod
    def from_stacked(cls, stacked, active, report=None):
        active = np.asarray(active, dtype=bool)
        gens = [None] * active.size
        for position, index in enumerate(np.flatnonzero(active)):
            gens[index] = stacked.take(position)
        constraint = Constraint.NONNEG if stacked.nonneg else stacked.constraint
        return cls(stacked.lambda0, constraint, tuple(gens), stacked=stacked, report=report)

    @property
    def N(self):
        return len(self.generators)

    @property
    def kind(self):
        kinds = {g.kind for g in self.generators if g is not None}
        return kinds.pop() if len(kinds) == 1 else None

    def generator(self, n):
        return self.generators[n]

    def beta_vector(self, x):
        x = np.asarray(x, dtype=float)
        out = self.lambda0 * (x != 0).astype(float)
        if self.stacked is not None:
            out[self.active] = self.stacked.beta(x[self.active])
            return out
        for n, g in enumerate(self.generators):
            if g is not None:
                out[n] = g.beta(x[n])
        return out


def brex_value(relaxation, x):
    """B_Psi(x) = sum_n beta_n(x_n)."""
    return float(np.sum(relaxation.beta_vector(x)))
