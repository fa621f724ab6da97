"""Lambert W nos dois ramos reais e raízes reais de cúbicas."""
import math

import numpy as np

from core.exceptions import DomainError

INV_E = math.exp(-1.0)
HALLEY_MAX_ITER = 50
# abaixo disso a série no ponto de ramificação já é exata em dupla precisão
BRANCH_SERIES_ONLY = 1e-3
DISC_RTOL = 1e-12


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def _seed_principal(z, p):
    with np.errstate(all='ignore'):
        near_branch = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        near_zero = z - z * z + 1.5 * z ** 3
        log_z = np.log(z)
        log_log_z = np.log(log_z)
        asymptotic = log_z - log_log_z + log_log_z / log_z
        middle = np.log1p(z)
    return np.select(
        [p < 0.5, np.abs(z) < 0.25, z > math.e],
        [near_branch, near_zero, asymptotic],
        default=middle,
    )


def _seed_lower(z, p):
    with np.errstate(all='ignore'):
        near_branch = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        log_mz = np.log(-z)
        log_log = np.log(-log_mz)
        asymptotic = log_mz - log_log + log_log / log_mz
    return np.where(p < 0.5, near_branch, asymptotic)


def lambert_w(branch, z):
    """w e^w = z no ramo 0 ou -1; chute por série ou assintótica, depois Halley."""
    if branch not in (0, -1):
        raise DomainError(f'Lambert W branch must be 0 or -1, got {branch}')
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise DomainError('Lambert W argument must be finite')
    if np.any(z_arr < -INV_E * (1.0 + 4 * np.finfo(float).eps)):
        raise DomainError('Lambert W argument below -1/e')
    if branch == -1 and np.any(z_arr >= 0.0):
        raise DomainError('Lambert W branch -1 requires -1/e <= z < 0')
    z_arr = np.maximum(z_arr, -INV_E)
    p = np.sqrt(np.maximum(2.0 * (math.e * z_arr + 1.0), 0.0))

    w = _seed_principal(z_arr, p) if branch == 0 else _seed_lower(z_arr, p)
    active = (p >= BRANCH_SERIES_ONLY) & (z_arr != 0.0)
    with np.errstate(all='ignore'):
        for _ in range(HALLEY_MAX_ITER):
            if not np.any(active):
                break
            ew = np.exp(w)
            f = w * ew - z_arr
            wp1 = w + 1.0
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            ok = active & (wp1 != 0.0) & (denom != 0.0) & np.isfinite(denom)
            step = np.where(ok, f / np.where(ok, denom, 1.0), 0.0)
            w = w - step
            active = ok & (np.abs(step) > 1e-15 * (1.0 + np.abs(w)))
    w = np.where(z_arr == 0.0, 0.0, w) if branch == 0 else w
    return _scalar_or_array(w)


def _polish(roots, b, c, d, steps=3):
    # Newton no polinômio mônico z^3 + b z^2 + c z + d, só aceita passos que reduzem o resíduo
    for _ in range(steps):
        f = ((roots + b) * roots + c) * roots + d
        df = (3.0 * roots + 2.0 * b) * roots + c
        with np.errstate(all='ignore'):
            candidate = roots - f / df
            f_new = ((candidate + b) * candidate + c) * candidate + d
        better = np.isfinite(candidate) & (np.abs(f_new) < np.abs(f))
        roots = np.where(better, candidate, roots)
    return roots


def depressed_cubic_roots(P, Q):
    """Raízes reais de t^3 + P t + Q = 0, forma (..., 3) completada com nan."""
    P, Q = np.broadcast_arrays(np.asarray(P, dtype=float), np.asarray(Q, dtype=float))
    half_q = Q / 2.0
    third_p = P / 3.0
    disc = half_q ** 2 + third_p ** 3
    scale = np.maximum(half_q ** 2, np.abs(third_p) ** 3)
    one_real = (disc > DISC_RTOL * scale) | (P >= 0.0)

    with np.errstate(all='ignore'):
        s = np.sqrt(np.maximum(disc, 0.0))
        u = np.cbrt(-half_q - np.copysign(s, half_q))
        v = np.where(u != 0.0, -third_p / np.where(u != 0.0, u, 1.0), 0.0)
        cardano = u + v

        r = 2.0 * np.sqrt(np.maximum(-third_p, 0.0))
        cos_arg = np.clip(
            (3.0 * Q / (2.0 * P)) * np.sqrt(np.maximum(-3.0 / P, 0.0)), -1.0, 1.0
        )
        phi = np.arccos(cos_arg) / 3.0
        trig = np.stack([r * np.cos(phi - 2.0 * np.pi * k / 3.0) for k in range(3)], axis=-1)

    roots = np.full(P.shape + (3,), np.nan)
    roots[..., 0] = np.where(one_real, cardano, trig[..., 0])
    roots[..., 1] = np.where(one_real, np.nan, trig[..., 1])
    roots[..., 2] = np.where(one_real, np.nan, trig[..., 2])
    return _polish(roots, 0.0, P[..., None], Q[..., None])


def cubic_real_roots(a3, a2, a1, a0):
    if a3 == 0:
        raise DomainError('leading coefficient must be nonzero')
    b, c, d = a2 / a3, a1 / a3, a0 / a3
    P = c - b * b / 3.0
    Q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    t = depressed_cubic_roots(P, Q)
    roots = t[~np.isnan(t)] - b / 3.0
    roots = _polish(roots, b, c, d)
    return np.sort(roots)
