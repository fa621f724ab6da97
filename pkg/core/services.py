"""Serviços dos comandos: leitura das flags, payloads JSON/CSV, paisagem, benchmark e autoverificação.

Os comandos de `core/management/commands` e os controllers HTTP chamam apenas estas funções.
"""
import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from calibration.services import CalibrationMode, calibrate
from certify.services import (
    certify_J0, check_localmin_JPsi, enumerate_minimizers, threshold_to_J0,
)
from core.conf import brex_setting
from core.exceptions import BrexError, DimensionError, ProblemFormatError
from datagen.services import generate, recovery_metrics
from fidelity.services import f_value
from generating.services import (
    GeneratorKind, KLGenerator, PowerGenerator, ShannonGenerator, beta_value,
)
from prox.services import ProxQuery, prox_beta
from prox.special import INV_E, lambert_w
from solver.services import (
    Backtracking, SolverConfig, objective_J0, objective_JPsi, solve, stopping_residual,
)
from testoracle.services import covering_grid, oracle_beta, oracle_prox, prox_objective

logger = logging.getLogger(__name__)

TRACE_HEADER = ['iter', 'J_Psi', 'J_0', 'step', 'delta']
MINIMIZER_HEADER = ['rank', 'support', 'J0', 'strict', 'preserved', 'x']
BENCHMARK_HEADER = ['instance', 'method', 'J0', 'rank', 'seconds', 'f1', 'rmse', 'status']
RANK_RTOL = 1e-9


def finite_or_none(value):
    value = float(value)
    return value if math.isfinite(value) else None


# --- flags -------------------------------------------------------------------

def parse_psi(text):
    """`power:<p>`, `shannon`, `kl[:<y>]` ou `fidelity` -> (GeneratorKind, params)."""
    kind, _, arg = (text or '').strip().lower().partition(':')
    try:
        if kind == 'power':
            return GeneratorKind.POWER, {'p': float(Fraction(arg)) if arg else 2.0}
        if kind == 'kl':
            return GeneratorKind.KL, ({'kl_y': float(arg)} if arg else {})
        if kind == 'shannon' and not arg:
            return GeneratorKind.SHANNON, {}
        if kind == 'fidelity' and not arg:
            return GeneratorKind.FIDELITY, {}
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemFormatError(f'invalid generator spec {text!r}') from exc
    raise ProblemFormatError(f'unknown generator spec {text!r}')


@dataclass(frozen=True)
class GammaSpec:
    mode: CalibrationMode
    margin: float = 0.0
    values: Optional[Tuple[float, ...]] = None


def parse_gamma(text):
    """`thr`, `thrx<factor>` ou `list:<v1,...>`."""
    text = (text or 'thr').strip().lower()
    try:
        if text == 'thr':
            return GammaSpec(CalibrationMode.AT_THRESHOLD)
        if text.startswith('thrx'):
            return GammaSpec(CalibrationMode.STRICT, float(text[4:]) - 1.0)
        if text.startswith('list:'):
            values = tuple(float(v) for v in text[5:].split(',') if v.strip())
            if not values:
                raise ValueError('empty list')
            return GammaSpec(CalibrationMode.MANUAL, values=values)
    except ValueError as exc:
        raise ProblemFormatError(f'invalid gamma spec {text!r}') from exc
    raise ProblemFormatError(f'unknown gamma spec {text!r}')


def parse_vector(text, size=None):
    if text is None:
        return None
    if isinstance(text, str):
        try:
            values = [float(v) for v in text.split(',') if v.strip()]
        except ValueError as exc:
            raise ProblemFormatError(f'invalid vector {text!r}') from exc
    else:
        values = [float(v) for v in text]
    if size is not None and len(values) != size:
        raise DimensionError(f'expected {size} values, got {len(values)}')
    return np.array(values)


def solver_config(problem, step='backtracking', x0=None, max_iter=None, keep_iterates=False):
    """`backtracking` ou `fixed[:<fração de 1/L>]`."""
    kind, _, arg = (step or 'backtracking').strip().lower().partition(':')
    x0 = parse_vector(x0, problem.N)
    if kind == 'backtracking' and not arg:
        return SolverConfig(step=Backtracking(), x0=x0, max_iter=max_iter, keep_iterates=keep_iterates)
    if kind == 'fixed':
        try:
            fraction = float(arg) if arg else 0.99
        except ValueError as exc:
            raise ProblemFormatError(f'invalid step spec {step!r}') from exc
        return SolverConfig.fixed_for(
            problem, fraction, x0=x0, max_iter=max_iter, keep_iterates=keep_iterates,
        )
    raise ProblemFormatError(f'unknown step spec {step!r}')


def build_relaxation(problem, psi='power:2', gamma='thr'):
    kind, params = parse_psi(psi)
    spec = parse_gamma(gamma)
    return calibrate(problem, kind, spec.mode, spec.margin, gamma=spec.values, **params)


# --- payloads ----------------------------------------------------------------

def calibration_payload(relaxation, report):
    data = report.to_dict()
    data['gamma_thr'] = [finite_or_none(v) for v in report.gamma_thr]
    for name in ('alpha_minus', 'alpha_plus', 'ell_minus', 'ell_plus'):
        data[name] = [finite_or_none(v) for v in getattr(relaxation, f'{name}_vec')]
    data['is_exact'] = report.is_exact
    return data


def cert_payload(record):
    data = record.to_dict()
    data['max_residual'] = finite_or_none(record.max_residual)
    return data


def trace_payload(trace):
    return [
        {'iter': row.iteration, 'J_Psi': finite_or_none(row.j_psi), 'J_0': row.j_0,
         'step': row.step, 'delta': row.delta}
        for row in trace
    ]


def _write_rows(handle, header, rows):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_csv(target, header, rows):
    """Cabeçalho fixo e floats em repr; `target` é um caminho ou um objeto com `write`."""
    if hasattr(target, 'write'):
        _write_rows(target, header, rows)
        return
    with Path(target).open('w', newline='') as handle:
        _write_rows(handle, header, rows)


def write_trace(path, trace):
    write_csv(path, TRACE_HEADER, (
        (row.iteration, float(row.j_psi), float(row.j_0), float(row.step), float(row.delta))
        for row in trace
    ))


# --- solve / calibrate / enumerate --------------------------------------------

@dataclass(frozen=True, eq=False)
class SolveRun:
    problem: object
    result: object
    relaxation: object = None
    report: object = None

    def payload(self, with_trace=False):
        problem, result = self.problem, self.result
        x = result.x_final
        data = {
            'schema': 1,
            'penalty': 'l0' if self.relaxation is None else 'brex',
            'x': x.tolist(),
            'J0': objective_J0(problem, x),
            'JPsi': None,
            'iterations': result.iterations,
            'stop_reason': result.stop_reason.value,
            'cert': cert_payload(result.certificate),
            'calibration': None,
        }
        if self.relaxation is not None:
            data['JPsi'] = objective_JPsi(problem, self.relaxation, x)
            thresholded = threshold_to_J0(self.relaxation, x)
            data['x_thresholded'] = thresholded.tolist()
            data['J0_thresholded'] = objective_J0(problem, thresholded)
            data['calibration'] = calibration_payload(self.relaxation, self.report)
        if with_trace:
            data['trace'] = trace_payload(result.trace)
        return data


def run_solve(problem, penalty='brex', psi='power:2', gamma='thr', step='backtracking',
              x0=None, max_iter=None, keep_iterates=False):
    if penalty not in ('brex', 'l0'):
        raise ProblemFormatError(f'unknown penalty {penalty!r}')
    relaxation = report = None
    if penalty == 'brex':
        relaxation, report = build_relaxation(problem, psi, gamma)
    config = solver_config(problem, step, x0, max_iter, keep_iterates)
    result = solve(problem, relaxation, config)
    tol = max(float(brex_setting('CERT_TOL')), stopping_residual(problem, config, result))
    if relaxation is None:
        record = certify_J0(problem, result.x_final, tol)
    else:
        record = check_localmin_JPsi(problem, relaxation, result.x_final, tol)
    return SolveRun(problem, result.with_certificate(record), relaxation, report)


def run_enumerate(problem, max_support=None, psi=None, gamma='thr'):
    relaxation = None
    if psi:
        relaxation, _ = build_relaxation(problem, psi, gamma)
    return enumerate_minimizers(problem, max_support, relaxation=relaxation)


def minimizer_payload(rank, item):
    return {
        'rank': rank,
        'support': list(item.record.support),
        'J0': item.j0,
        'strict': item.record.is_strict,
        'preserved': item.record.preserved,
        'x': item.x.tolist(),
        'cert': cert_payload(item.record),
    }


def enumerate_payload(minimizers):
    return {
        'schema': 1,
        'count': len(minimizers),
        'global_J0': minimizers[0].j0 if minimizers else None,
        'minimizers': [minimizer_payload(i + 1, m) for i, m in enumerate(minimizers)],
    }


def minimizer_rows(minimizers):
    for i, m in enumerate(minimizers, start=1):
        preserved = '' if m.record.preserved is None else m.record.preserved
        yield (
            i, ';'.join(str(n) for n in m.record.support), float(m.j0), m.record.is_strict,
            preserved, ';'.join(repr(float(v)) for v in m.x),
        )


# --- landscape -----------------------------------------------------------------

def evaluate_objectives(problem, relaxation, X):
    """J_0 e J_Psi (nan sem relaxação) por linha de X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    fid = problem.fidelity
    Z = X @ problem.A.T
    smooth = np.sum(f_value(fid.kind, Z, fid.y, fid.b), axis=1) + 0.5 * problem.lambda2 * np.sum(X ** 2, axis=1)
    j0 = smooth + problem.lambda0 * np.count_nonzero(X, axis=1)
    if relaxation is None:
        return j0, np.full_like(j0, np.nan)
    penalty = np.zeros_like(j0)
    for n in range(problem.N):
        g = relaxation.generator(n)
        column = X[:, n]
        if g is None:
            penalty += problem.lambda0 * (column != 0)
        else:
            penalty += np.asarray(g.beta(column))
    return j0, smooth + penalty


def default_bounds(problem, relaxation, minimizers=()):
    scale = [1.0]
    scale.extend(float(np.max(np.abs(m.x), initial=0.0)) for m in minimizers)
    if relaxation is not None:
        scale.extend(v for v in np.abs(relaxation.alpha_plus_vec) if np.isfinite(v))
    hi = 1.5 * max(scale)
    return (0.0 if problem.nonneg else -hi), hi


@dataclass(frozen=True, eq=False)
class Landscape:
    header: List[str]
    rows: np.ndarray
    minimizers: list


def landscape(problem, relaxation=None, points=201, bounds=None):
    if problem.N > 2:
        raise DimensionError('landscapes are limited to N <= 2')
    if points < 3:
        raise ProblemFormatError('landscape grid needs at least 3 points')
    minimizers = enumerate_minimizers(problem, relaxation=relaxation)
    lo, hi = bounds or default_bounds(problem, relaxation, minimizers)
    if problem.nonneg:
        lo = max(lo, 0.0)
    axis = np.linspace(lo, hi, points)
    # os minimizadores enumerados entram na grade
    axis = np.unique(np.concatenate([axis, [v for m in minimizers for v in m.x if lo <= v <= hi]]))
    if problem.N == 1:
        X = axis[:, None]
    else:
        g1, g2 = np.meshgrid(axis, axis, indexing='ij')
        X = np.column_stack([g1.ravel(), g2.ravel()])
    j0, jpsi = evaluate_objectives(problem, relaxation, X)
    header = [f'x{n + 1}' for n in range(problem.N)] + ['J0', 'JPsi']
    return Landscape(header, np.column_stack([X, j0, jpsi]), minimizers)


def trajectory_rows(problem, relaxation, iterates):
    X = np.array(iterates)
    j0, jpsi = evaluate_objectives(problem, relaxation, X)
    for k, (x, a, b) in enumerate(zip(X, j0, jpsi)):
        yield (k, *[float(v) for v in x], float(a), float(b))


# --- benchmark -----------------------------------------------------------------

def rank_values(values, rtol=RANK_RTOL):
    """Ranking de competição ("1224"); inf fica por último."""
    values = [float(v) for v in values]
    ranks = []
    for own in values:
        cut = own - rtol * max(1.0, abs(own)) if math.isfinite(own) else math.inf
        ranks.append(1 + sum(1 for v in values if v < cut))
    return ranks


@dataclass(frozen=True)
class BenchmarkRow:
    instance: int
    method: str
    j0: float
    rank: int
    seconds: float
    f1: Optional[float]
    rmse: Optional[float]
    status: str


@dataclass(frozen=True, eq=False)
class BenchmarkReport:
    methods: Tuple[str, ...]
    instances: int
    rows: Tuple[BenchmarkRow, ...]

    def for_method(self, method):
        return [r for r in self.rows if r.method == method]

    def rank_counts(self):
        counts = {m: [0] * len(self.methods) for m in self.methods}
        for row in self.rows:
            counts[row.method][row.rank - 1] += 1
        return counts

    def times(self):
        out = {}
        for m in self.methods:
            seconds = np.array([r.seconds for r in self.for_method(m)])
            out[m] = {'mean': float(np.mean(seconds)), 'std': float(np.std(seconds))}
        return out

    def to_dict(self):
        summary = {}
        for m in self.methods:
            rows = [r for r in self.for_method(m) if r.status == 'ok']
            summary[m] = {
                'failures': self.instances - len(rows),
                'f1_mean': float(np.mean([r.f1 for r in rows])) if rows else None,
                'rmse_mean': float(np.mean([r.rmse for r in rows])) if rows else None,
            }
        return {
            'schema': 1,
            'methods': list(self.methods),
            'instances': self.instances,
            'rank_counts': self.rank_counts(),
            'times': self.times(),
            'recovery': summary,
            'rows': [
                {**asdict(r), 'j0': finite_or_none(r.j0)} for r in self.rows
            ],
        }

    def csv_rows(self):
        for r in self.rows:
            yield (r.instance, r.method, float(r.j0), r.rank, float(r.seconds),
                   '' if r.f1 is None else float(r.f1), '' if r.rmse is None else float(r.rmse), r.status)


def run_method(problem, method):
    relaxation = None
    if method != 'l0':
        relaxation, _ = build_relaxation(problem, method, 'thr')
    result = solve(problem, relaxation, SolverConfig())
    x = result.x_final
    if relaxation is not None:
        thresholded = threshold_to_J0(relaxation, x)
        if objective_J0(problem, thresholded) <= objective_J0(problem, x):
            x = thresholded
    return x


def _benchmark_instance(config, index, methods, lambda0_scale, lambda2):
    instance = generate(config.with_seed(config.seed + index))
    problem = instance.to_problem(lambda0_scale, lambda2)
    outcomes = []
    for method in methods:
        start = time.perf_counter()
        try:
            x = run_method(problem, method)
            j0 = objective_J0(problem, x)
            f1, rmse = recovery_metrics(x, instance.x_true)
            status = 'ok'
        except BrexError as exc:
            logger.warning('benchmark instance %d, method %s failed: %s', index, method, exc)
            j0, f1, rmse, status = math.inf, None, None, f'failed: {exc}'
        outcomes.append((method, j0, time.perf_counter() - start, f1, rmse, status))
    ranks = rank_values([o[1] for o in outcomes])
    return [
        BenchmarkRow(index, method, j0, rank, seconds, f1, rmse, status)
        for (method, j0, seconds, f1, rmse, status), rank in zip(outcomes, ranks)
    ]


def run_benchmark(config, methods, instances, lambda0_scale=1.0, lambda2=0.0, max_workers=None):
    methods = tuple(methods)
    if not methods:
        raise ProblemFormatError('benchmark needs at least one method')
    if len(set(methods)) != len(methods):
        raise ProblemFormatError('benchmark methods must be distinct')
    for method in methods:
        if method != 'l0':
            parse_psi(method)
    workers = max(1, max_workers or int(brex_setting('THREADS')))

    def work(index):
        return _benchmark_instance(config, index, methods, lambda0_scale, lambda2)

    if workers == 1:
        blocks = [work(i) for i in range(instances)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, range(instances)))
    rows = tuple(row for block in blocks for row in block)
    logger.info('benchmark done: %d instances x %d methods', instances, len(methods))
    return BenchmarkReport(methods, instances, rows)


# --- selfcheck -----------------------------------------------------------------

@dataclass(frozen=True)
class SelfCheck:
    name: str
    ok: bool
    error: float


def selfcheck_generators():
    return [
        PowerGenerator(gamma=10.0, lambda0=0.5, p=2.0),
        PowerGenerator(gamma=4.0, lambda0=0.5, p=1.5),
        PowerGenerator(gamma=4.0, lambda0=0.5, p=4.0 / 3.0),
        ShannonGenerator(gamma=2.0, lambda0=0.5),
        KLGenerator(gamma=3.0, lambda0=0.5, y=1.0, b=0.5),
    ]


def _label(g):
    return f'{g.kind.value}:{g.p:g}' if isinstance(g, PowerGenerator) else g.kind.value


def selfcheck(points=25):
    """Bateria curta: Lambert W, beta contra o supremo numérico e prox contra a busca em grade."""
    checks = []
    for branch, zs in ((0, [-0.999 * INV_E, -0.2, 0.5, 3.0, 50.0]), (-1, [-0.999 * INV_E, -0.2, -1e-3])):
        z = np.array(zs)
        w = np.asarray(lambert_w(branch, z))
        error = float(np.max(np.abs(w * np.exp(w) - z) / np.abs(z)))
        checks.append(SelfCheck(f'lambert_w branch {branch}', error <= 1e-13, error))

    for g in selfcheck_generators():
        grid = covering_grid(g)
        xs = np.linspace(grid.lo, grid.hi, points)
        error = max(abs(float(beta_value(g, x)) - oracle_beta(g, x)) for x in xs)
        checks.append(SelfCheck(f'beta {_label(g)}', error <= 1e-6, error))

        for rho in (0.05, 0.5):
            excess = -math.inf
            for x in np.linspace(-2.0 if not g.nonneg else 0.0, 2.0, points):
                u = prox_beta(ProxQuery(g, rho, x)).value
                _, best = oracle_prox(g, rho, x)
                excess = max(excess, float(prox_objective(g, rho, x, u)) - best)
            checks.append(SelfCheck(f'prox {_label(g)} rho={rho:g}', excess <= 1e-8, max(excess, 0.0)))
    return checks
