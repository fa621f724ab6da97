"""Prox de rho*beta seguido da projeção em C.

O minimizador está em {0, x} U S_x, com S_x as raízes de
u - rho psi'(u) = x - rho psi'(alpha^+-).
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from core.exceptions import DomainError
from fidelity.services import Constraint
from generating.services import GeneratorKind, GeneratorSpec
from prox.special import INV_E, depressed_cubic_roots, lambert_w

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-12
NUMERIC_GRID = 65


@dataclass(frozen=True, eq=False)
class ProxQuery:
    g: GeneratorSpec
    rho: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise DomainError('prox step rho must be positive and finite')
        if not math.isfinite(self.x):
            raise DomainError('prox input must be finite')
        if self.g.is_stacked:
            raise DomainError('prox queries take a single-coordinate generator')
        object.__setattr__(self, 'rho', float(self.rho))
        object.__setattr__(self, 'x', float(self.x))


@dataclass(frozen=True)
class ProxResult:
    value: float
    tie: bool
    candidates: Tuple[float, ...]


def power_closed_form(p):
    for q in (2.0, 1.5, 4.0 / 3.0):
        if math.isclose(p, q, rel_tol=0.0, abs_tol=1e-12):
            return q
    return None


def has_closed_form(g):
    if g.kind in (GeneratorKind.SHANNON, GeneratorKind.KL):
        return True
    return g.kind is GeneratorKind.POWER and power_closed_form(g.p) is not None


def _shift(g, rho, x):
    slope = np.where(x < 0, g.d1_alpha_minus, g.d1_alpha_plus)
    return x - rho * slope


def _power_solutions(g, rho, x, c):
    k = rho * np.asarray(g.gamma, dtype=float) * np.ones_like(x)
    p = power_closed_form(g.p)
    if p == 2.0:
        t = 1.0 - k
        with np.errstate(divide='ignore', invalid='ignore'):
            # rho*gamma = 1: equação degenerada, S_x vazio
            return np.where(t != 0.0, c / np.where(t != 0.0, t, 1.0), np.nan)[..., None]
    columns = []
    if p == 1.5:
        # u = z^2 (u >= 0) ou u = -z^2 (u <= 0), z^2 - 2 k z -+ c = 0
        for sign in (1.0, -1.0):
            disc = k * k + sign * c
            root = np.sqrt(np.where(disc >= 0, disc, np.nan))
            for z in (k + root, k - root):
                z = np.where(z >= 0, z, np.nan)
                columns.append(sign * z * z)
        return np.stack(columns, axis=-1)
    # p = 4/3: u = +-z^3 com z^3 - 3 k z -+ c = 0
    for sign in (1.0, -1.0):
        roots = depressed_cubic_roots(-3.0 * k, -sign * c)
        roots = np.where(roots >= 0, roots, np.nan)
        columns.append(sign * roots ** 3)
    return np.concatenate(columns, axis=-1)


def _shannon_solutions(g, rho, x, c):
    k = rho * np.asarray(g.gamma, dtype=float) * np.ones_like(x)
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        arg = -np.exp(-c / k) / k
    valid = np.isfinite(arg) & (arg < 0.0) & (arg >= -INV_E * (1.0 + 4 * np.finfo(float).eps))
    safe = np.where(valid, arg, -0.1)
    columns = []
    for branch in (0, -1):
        u = -k * np.asarray(lambert_w(branch, safe))
        columns.append(np.where(valid, u, np.nan))
    return np.stack(columns, axis=-1)


def _kl_solutions(g, rho, x, c):
    k = rho * np.asarray(g.gamma, dtype=float)
    b = np.asarray(g.b, dtype=float)
    y = np.asarray(g.y, dtype=float)
    linear = b - k - c
    const = y * k - k * b - b * c
    disc = linear * linear - 4.0 * const
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    return np.stack([(-linear + root) / 2.0, (-linear - root) / 2.0], axis=-1)


def _closed_form_solutions(g, rho, x):
    c = _shift(g, rho, x)
    if g.kind is GeneratorKind.POWER:
        return _power_solutions(g, rho, x, c)
    if g.kind is GeneratorKind.SHANNON:
        return _shannon_solutions(g, rho, x, c)
    return _kl_solutions(g, rho, x, c)


def _numeric_solutions(g, rho, x):
    found = []
    pieces = [(0.0, g.alpha_plus, g.d1_alpha_plus)]
    if not g.nonneg:
        pieces.append((g.alpha_minus, 0.0, g.d1_alpha_minus))
    for lo, hi, slope in pieces:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            continue
        c = x - rho * slope

        def residual(u):
            return u - rho * float(g.d1(u)) - c

        grid = np.linspace(lo, hi, NUMERIC_GRID)
        values = np.array([residual(u) for u in grid])
        found.extend(grid[values == 0.0])
        for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
            found.append(brentq(residual, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return np.array(found, dtype=float).reshape(1, -1)


def _feasible(g, u):
    ok = np.isfinite(u)
    if g.nonneg:
        ok &= u >= 0
    return ok


def _candidate_table(g, rho, x):
    # colunas: 0, x, S_x (nan sem raiz)
    if has_closed_form(g):
        solutions = _closed_form_solutions(g, rho, x)
    else:
        solutions = _numeric_solutions(g, rho, float(x[0]))
    table = np.concatenate([np.zeros_like(x)[..., None], x[..., None], solutions], axis=-1)
    return np.where(_feasible(g, table), table, np.nan)


def _select(g, rho, x, table):
    # empate: vence o de menor módulo
    objective = np.full(table.shape, np.inf)
    for j in range(table.shape[-1]):
        u = table[..., j]
        ok = ~np.isnan(u)
        safe = np.where(ok, u, 0.0)
        value = np.asarray(g.beta(safe)) + (safe - x) ** 2 / (2.0 * rho)
        objective[..., j] = np.where(ok, value, np.inf)
    best = np.min(objective, axis=-1, keepdims=True)
    tied = objective <= best + TIE_RTOL * np.maximum(1.0, np.abs(best))
    magnitude = np.where(tied, np.abs(np.nan_to_num(table, nan=np.inf)), np.inf)
    choice = np.argmin(magnitude, axis=-1)
    chosen = np.take_along_axis(table, choice[..., None], axis=-1)[..., 0]
    return chosen, tied


def _prepare(g, x):
    x = np.asarray(x, dtype=float)
    trivial = (x == 0.0) | (g.nonneg & (x < 0.0))
    return x, trivial, np.where(trivial, 1.0, x)


def prox_family(g, rho, x):
    x, trivial, work = _prepare(g, x)
    chosen, _ = _select(g, rho, work, _candidate_table(g, rho, work))
    return np.where(trivial, 0.0, chosen)


def solution_set(q):
    x = np.array([q.x])
    if q.x == 0.0 or (q.g.nonneg and q.x < 0):
        return np.array([])
    if has_closed_form(q.g):
        s = _closed_form_solutions(q.g, q.rho, x)
    else:
        s = _numeric_solutions(q.g, q.rho, q.x)
    s = s[_feasible(q.g, s)]
    return np.unique(s)


def candidate_set(q):
    base = [0.0]
    if not (q.g.nonneg and q.x < 0):
        base.append(q.x)
    return np.unique(np.concatenate([base, solution_set(q)]))


def prox_beta(q):
    x, trivial, work = _prepare(q.g, np.array([q.x]))
    if trivial[0]:
        return ProxResult(0.0, False, (0.0,))
    table = _candidate_table(q.g, q.rho, work)
    chosen, tied = _select(q.g, q.rho, work, table)
    tied_values = np.unique(table[tied])
    candidates = tuple(float(u) for u in np.unique(table[~np.isnan(table)]))
    return ProxResult(float(chosen[0]), bool(tied_values.size > 1), candidates)


def hard_threshold(x, rho, lambda0, constraint=Constraint.REALS):
    """prox de rho*lambda0*|.|_0; |x| = sqrt(2 rho lambda0) vai para 0."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) > math.sqrt(2.0 * rho * lambda0), x, 0.0)
    if Constraint(constraint) is Constraint.NONNEG:
        out = np.maximum(out, 0.0)
    return out


def prox_vector(relaxation, rho, x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError('prox input must be finite')
    out = hard_threshold(x, rho, relaxation.lambda0, relaxation.constraint)
    stacked = relaxation.stacked
    if stacked is not None and has_closed_form(stacked):
        active = relaxation.active
        out[active] = prox_family(stacked, rho, x[active])
        return out
    for n, g in enumerate(relaxation.generators):
        if g is not None:
            out[n] = prox_beta(ProxQuery(g, rho, x[n])).value
    return out
