"""Oráculos por força bruta: grade mais um refinamento de Brent.

`oracle_beta` e a transformada S usam só psi e psi', nunca o beta fechado.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from core.exceptions import DomainError
from generating.services import RelaxationSpec, beta_value

REFINE_XATOL = 1e-13
TAIL_POINTS = 50


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    points: int = 2001

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError('grid needs finite lo < hi')
        if self.points < 3:
            raise DomainError('grid needs at least 3 points')

    def values(self):
        return np.linspace(self.lo, self.hi, self.points)


def _finite_or(value, fallback):
    return float(value) if np.isfinite(value) else float(fallback)


def covering_grid(g, x=0.0, margin=1.0, points=2001):
    hi = max(_finite_or(g.alpha_plus, 10.0 * max(1.0, abs(x))), x) + margin
    lo = 0.0 if g.nonneg else min(_finite_or(g.alpha_minus, -10.0 * max(1.0, abs(x))), x) - margin
    return GridSpec(lo, hi, points)


def _with_anchors(g, grid, *extra):
    # grade + 0, alpha^+-, pontos extras e uma cauda larga
    base = [grid.values(), [0.0], extra]
    for endpoint in (g.alpha_plus, g.alpha_minus):
        if np.isfinite(endpoint):
            base.append([endpoint])
    span = max(abs(grid.lo), abs(grid.hi), 1.0)
    tail = np.geomspace(span, 100.0 * span, TAIL_POINTS)
    base.append(tail)
    if not g.nonneg:
        base.append(-tail)
    z = np.unique(np.concatenate([np.atleast_1d(np.asarray(b, dtype=float)) for b in base]))
    return z[z >= 0] if g.nonneg else z


def bregman_matrix(g, x, z):
    """d_psi(x_i, z_j); d(x, x) = 0 e +inf fora do domínio."""
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))[None, :]
    with np.errstate(all='ignore'):
        d = np.asarray(g.value(x)) - np.asarray(g.value(z)) - np.asarray(g.d1(z)) * (x - z)
    d = np.where(x == z, 0.0, d)
    return np.where(np.isfinite(d), d, np.inf)


def _minorant(g, x, z):
    d0 = bregman_matrix(g, 0.0, z)[0]
    dx = bregman_matrix(g, x, z)[0]
    h = np.minimum(g.lambda0, d0) - dx
    return np.where(np.isnan(h), -np.inf, h)


def _refine_max(fun, grid_z, values):
    i = int(np.argmax(values))
    best = float(values[i])
    lo = grid_z[max(i - 1, 0)]
    hi = grid_z[min(i + 1, grid_z.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -fun(t), bounds=(lo, hi), method='bounded',
                              options={'xatol': REFINE_XATOL})
        if np.isfinite(res.fun) and -res.fun > best:
            return -float(res.fun), float(res.x)
    return best, float(grid_z[i])


def oracle_beta(g, x, grid=None):
    """sup_z min(lambda0, d(0, z)) - d(x, z)."""
    x = float(x)
    if g.nonneg and x < 0:
        raise DomainError('x outside the generator domain')
    grid = grid or covering_grid(g, x)
    z = _with_anchors(g, grid, x)
    h = _minorant(g, x, z)
    value, _ = _refine_max(lambda t: float(_minorant(g, x, np.array([t]))[0]), z, h)
    return value


def prox_objective(g, rho, x, u):
    u = np.asarray(u, dtype=float)
    return np.asarray(beta_value(g, u)) + (u - x) ** 2 / (2.0 * rho)


def oracle_prox(g, rho, x, grid=None):
    """argmin_u beta(u) + (u - x)^2 / (2 rho) na grade; devolve (u, objetivo)."""
    x = float(x)
    grid = grid or covering_grid(g, x)
    u = grid.values()
    u = np.unique(np.concatenate([u, [0.0, x] if not (g.nonneg and x < 0) else [0.0]]))
    if g.nonneg:
        u = u[u >= 0]
    values = prox_objective(g, rho, x, u)
    value, arg = _refine_max(lambda t: -float(prox_objective(g, rho, x, t)), u, -values)
    return arg, -value


def oracle_prox_batch(g, rho, xs, points=2001):
    xs = np.asarray(xs, dtype=float)
    lo_x = float(np.min(xs, initial=0.0))
    hi_x = float(np.max(xs, initial=0.0))
    grid = covering_grid(g, hi_x, points=points)
    if not g.nonneg:
        lo = min(grid.lo, lo_x - 1.0)
        grid = GridSpec(lo, grid.hi, points)
    out = [oracle_prox(g, rho, x, grid) for x in xs]
    return np.array([u for u, _ in out]), np.array([v for _, v in out])


def oracle_s_values(g, z):
    """S(z) = sup_x -lambda0 |x|_0 - d(x, z), com o sup na própria grade."""
    z = np.asarray(z, dtype=float)
    d = bregman_matrix(g, z, z)
    penalty = np.where(z != 0, g.lambda0, 0.0)[:, None]
    return np.max(-penalty - d, axis=0)


def _s_transform_1d(g, z, x):
    anchors = [0.0, x] + [e for e in (g.alpha_minus, g.alpha_plus) if np.isfinite(e)]
    z = np.unique(np.concatenate([np.asarray(z, dtype=float), anchors]))
    if g.nonneg:
        z = z[z >= 0]
    s = oracle_s_values(g, z)
    return float(np.max(-s - bregman_matrix(g, x, z)[0]))


def oracle_s_transform(relaxation, z_grid, x):
    if not isinstance(relaxation, RelaxationSpec):
        return _s_transform_1d(relaxation, z_grid, float(x))
    x = np.asarray(x, dtype=float)
    total = 0.0
    for n, g in enumerate(relaxation.generators):
        if g is None:
            total += relaxation.lambda0 * float(x[n] != 0)
        else:
            total += _s_transform_1d(g, z_grid, float(x[n]))
    return total


def oracle_convexity(values, tol=1e-9):
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return True
    return bool(np.all(np.diff(values, 2) >= -tol))


def finite_difference(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    return (np.asarray(fun(x + h)) - np.asarray(fun(x - h))) / (2.0 * h)


def numeric_gradient(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return grad
