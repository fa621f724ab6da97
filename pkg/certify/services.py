"""Certificados de otimalidade para J_Psi e J_0 e enumeração por suporte."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from itertools import chain, combinations
from typing import Optional, Tuple

import numpy as np

from core.conf import brex_setting
from core.exceptions import CombinatorialLimitError, ConvergenceError, DomainError
from fidelity.services import FidelityKind, grad_F
from solver.services import objective_J0

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 100
NEWTON_GTOL = 1e-12
RANK_RTOL = 1e-10
PARALLEL_MIN_SUPPORTS = 64


@dataclass(frozen=True)
class CertRecord:
    support: Tuple[int, ...]
    is_critical_jpsi: Optional[bool]
    is_localmin_jpsi: Optional[bool]
    is_localmin_j0: bool
    is_strict: bool
    max_residual: float
    interval_violations: Tuple[int, ...] = ()
    boundary_hits: Tuple[int, ...] = ()
    preserved: Optional[bool] = None

    def to_dict(self):
        data = asdict(self)
        data['support'] = list(self.support)
        data['interval_violations'] = list(self.interval_violations)
        data['boundary_hits'] = list(self.boundary_hits)
        return data


@dataclass(frozen=True, eq=False)
class EnumeratedMinimizer:
    x: np.ndarray
    record: CertRecord
    j0: float


def _tol(tol):
    return float(brex_setting('CERT_TOL')) if tol is None else float(tol)


def support_of(x):
    return tuple(int(i) for i in np.flatnonzero(np.asarray(x)))


def _is_full_rank(problem, support):
    if problem.lambda2 > 0 or not support:
        return True
    sv = np.linalg.svd(problem.A[:, list(support)], compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return False
    return int(np.sum(sv > RANK_RTOL * sv[0])) == len(support)


def j0_residual(problem, x):
    x = np.asarray(x, dtype=float)
    support = list(support_of(x))
    if not support:
        return 0.0
    s = grad_F(problem.fidelity, problem.A, x)
    return float(np.max(np.abs(s[support] + problem.lambda2 * x[support])))


def check_localmin_J0(problem, x, tol=None):
    x = np.asarray(x, dtype=float)
    support = list(support_of(x))
    if problem.nonneg and np.any(x < 0):
        return False
    if not support:
        return True
    try:
        return j0_residual(problem, x) <= _tol(tol)
    except DomainError:
        return False


def certify_J0(problem, x, tol=None):
    x = np.asarray(x, dtype=float)
    support = support_of(x)
    is_min = check_localmin_J0(problem, x, tol)
    return CertRecord(
        support=support,
        is_critical_jpsi=None,
        is_localmin_jpsi=None,
        is_localmin_j0=is_min,
        is_strict=is_min and _is_full_rank(problem, support),
        max_residual=j0_residual(problem, x),
    )


def _coordinate_analysis(problem, relaxation, x):
    # resíduo por coordenada, zeros fora do intervalo e toques nas bordas
    slack = float(brex_setting('INTERVAL_SLACK'))
    s = grad_F(problem.fidelity, problem.A, x)
    residuals = np.zeros(problem.N)
    outside_interval = []
    boundary = []
    for n in range(problem.N):
        g = relaxation.generator(n)
        xn = x[n]
        if xn == 0.0:
            v = -s[n]
            distance = max(0.0, relaxation.ell_minus_vec[n] - v, v - relaxation.ell_plus_vec[n])
            residuals[n] = distance
            if distance > slack:
                outside_interval.append(n)
            continue
        r = s[n] + problem.lambda2 * xn
        if g is not None:
            if g.alpha_minus <= xn < 0:
                r += g.d1_alpha_minus - float(g.d1(xn))
            elif 0 < xn <= g.alpha_plus:
                r += g.d1_alpha_plus - float(g.d1(xn))
            if min(abs(xn - g.alpha_plus), abs(xn - g.alpha_minus)) <= slack:
                boundary.append(n)
        residuals[n] = abs(r)
    return residuals, outside_interval, boundary


def check_critical_JPsi(problem, relaxation, x, tol=None):
    x = problem.check_feasible(x)
    residuals, outside_interval, _ = _coordinate_analysis(problem, relaxation, x)
    nonzero = x != 0
    ok = not outside_interval and bool(np.all(residuals[nonzero] <= _tol(tol)))
    return ok, float(np.max(residuals, initial=0.0))


def _inside_closed_interval(relaxation, x, support):
    out = []
    for n in support:
        g = relaxation.generator(n)
        if g is not None and g.alpha_minus <= x[n] <= g.alpha_plus:
            out.append(n)
    return tuple(out)


def check_localmin_JPsi(problem, relaxation, x, tol=None):
    x = problem.check_feasible(x)
    report = relaxation.report
    if report is not None and not report.is_exact:
        logger.warning('certifying against a relaxation that is not flagged exact')
    residuals, outside_interval, boundary = _coordinate_analysis(problem, relaxation, x)
    nonzero = x != 0
    critical = not outside_interval and bool(np.all(residuals[nonzero] <= _tol(tol)))
    support = support_of(x)
    violations = _inside_closed_interval(relaxation, x, support)
    is_min = critical and not violations
    return CertRecord(
        support=support,
        is_critical_jpsi=critical,
        is_localmin_jpsi=is_min,
        is_localmin_j0=check_localmin_J0(problem, x, tol),
        is_strict=is_min and _is_full_rank(problem, support),
        max_residual=float(np.max(residuals, initial=0.0)),
        interval_violations=violations,
        boundary_hits=tuple(boundary),
    )


def check_preserved(problem, relaxation, x):
    x = problem.check_feasible(x)
    slack = float(brex_setting('INTERVAL_SLACK'))
    support = support_of(x)
    if _inside_closed_interval(relaxation, x, support):
        return False
    s = grad_F(problem.fidelity, problem.A, x)
    off = np.flatnonzero(x == 0)
    v = -s[off]
    return bool(np.all(
        (v >= relaxation.ell_minus_vec[off] - slack) & (v <= relaxation.ell_plus_vec[off] + slack)
    ))


def threshold_to_J0(relaxation, x):
    """Zera as coordenadas dentro de (alpha^-, alpha^+)."""
    x = np.array(x, dtype=float)
    inside = (
        relaxation.active
        & (x != 0)
        & (x > relaxation.alpha_minus_vec)
        & (x < relaxation.alpha_plus_vec)
    )
    x[inside] = 0.0
    return x


def _restricted_value(problem, cols, z):
    try:
        return problem.fidelity.value(cols @ z) + 0.5 * problem.lambda2 * float(z @ z)
    except DomainError:
        return math.inf


def _newton(problem, cols):
    # Newton amortecido em z -> F(A_s z) + lambda2/2 ||z||^2
    fid = problem.fidelity
    k = cols.shape[1]
    z = np.zeros(k)
    value = _restricted_value(problem, cols, z)
    eye = np.eye(k)
    gnorm = math.inf
    for _ in range(NEWTON_MAX_ITER):
        u = cols @ z
        g = cols.T @ fid.d1(u) + problem.lambda2 * z
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= NEWTON_GTOL:
            return z
        H = cols.T @ (fid.d2(u)[:, None] * cols) + problem.lambda2 * eye
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(H, -g, rcond=None)[0]
        slope = float(g @ d)
        if not slope < 0:
            break
        t = 1.0
        while t > 1e-16:
            trial = z + t * d
            trial_value = _restricted_value(problem, cols, trial)
            if trial_value <= value + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        z, value = trial, trial_value
    # estagnação numérica perto do ótimo também conta como convergência
    if gnorm <= 1e-8 * max(1.0, float(np.max(np.abs(cols.T @ fid.d1(np.zeros(cols.shape[0])))))):
        return z
    raise ConvergenceError(f'Newton did not converge (gradient norm {gnorm:.3g})')


def _restricted_solve(problem, support):
    cols = problem.A[:, list(support)]
    if problem.fidelity.kind is FidelityKind.LS:
        k = len(support)
        lhs = np.vstack([cols, math.sqrt(problem.lambda2) * np.eye(k)])
        rhs = np.concatenate([problem.fidelity.y, np.zeros(k)])
        return np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return _newton(problem, cols)


def _candidate(problem, support, relaxation, tol):
    x = np.zeros(problem.N)
    if support:
        try:
            z = _restricted_solve(problem, support)
        except ConvergenceError as exc:
            logger.warning('support %s skipped: %s', list(support), exc)
            return None
        if np.any(np.abs(z) <= 1e-12 * max(1.0, float(np.max(np.abs(z))))):
            return None
        if problem.nonneg and np.any(z <= 0):
            return None
        x[list(support)] = z
    record = certify_J0(problem, x, tol)
    if not record.is_localmin_j0:
        logger.warning('support %s: restricted solution failed the residual check', list(support))
        return None
    if relaxation is not None:
        record = replace(record, preserved=check_preserved(problem, relaxation, x))
    return EnumeratedMinimizer(x, record, objective_J0(problem, x))


def enumerate_minimizers(problem, max_support=None, *, relaxation=None, tol=None, max_workers=None):
    """Todos os minimizadores locais de J_0 com |suporte| <= max_support, ordenados por J_0."""
    N = problem.N
    max_support = N if max_support is None else int(max_support)
    if N > int(brex_setting('ENUM_MAX_N')):
        raise CombinatorialLimitError(f'support enumeration is limited to N <= {brex_setting("ENUM_MAX_N")}')
    if not 0 <= max_support <= N:
        raise CombinatorialLimitError('max_support must lie in [0, N]')
    total = sum(math.comb(N, k) for k in range(max_support + 1))
    if total > int(brex_setting('ENUM_LIMIT')):
        raise CombinatorialLimitError(f'{total} supports exceed the enumeration limit')

    supports = list(chain.from_iterable(combinations(range(N), k) for k in range(max_support + 1)))

    def work(support):
        return _candidate(problem, support, relaxation, tol)

    if total >= PARALLEL_MIN_SUPPORTS:
        workers = max_workers or int(brex_setting('THREADS'))
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            found = list(pool.map(work, supports))
    else:
        found = [work(s) for s in supports]

    unique = {}
    for item in found:
        if item is not None:
            unique.setdefault(tuple(np.round(item.x, 12)), item)
    return sorted(unique.values(), key=lambda m: (m.j0, len(m.record.support)))
