import csv
import json
from io import StringIO

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from core.schemas import load_problem
from core.services import run_benchmark
from datagen.services import DataGenConfig


def run(*args, **kwargs):
    out = StringIO()
    call_command(*args, stdout=out, **kwargs)
    return out.getvalue()


def read_csv(path):
    with open(path, newline='') as handle:
        return list(csv.reader(handle))


def returncode(*args, **kwargs):
    with pytest.raises(CommandError) as info:
        run(*args, **kwargs)
    return info.value.returncode


class TestSolveCommand:

    def test_solve_with_trace(self, problem_file, tmp_path):
        trace = tmp_path / 'trace.csv'
        data = json.loads(run('solve', problem_file, '--step', 'fixed', '--trace', str(trace)))
        assert data['schema'] == 1
        assert data['J0_thresholded'] == pytest.approx(0.55, abs=1e-6)
        assert data['cert']['is_localmin_jpsi'] is True
        rows = read_csv(trace)
        assert rows[0] == ['iter', 'J_Psi', 'J_0', 'step', 'delta']
        assert len(rows) == data['iterations'] + 1
        assert float(rows[-1][2]) == pytest.approx(0.55, abs=1e-6)

    def test_solve_to_file(self, problem_file, tmp_path):
        out = tmp_path / 'result.json'
        message = run('solve', problem_file, '--penalty', 'l0', '--out', str(out))
        assert 'written' in message
        data = json.loads(out.read_text())
        assert data['penalty'] == 'l0'
        assert data['JPsi'] is None

    def test_exit_codes(self, problem_file, tmp_path):
        broken = tmp_path / 'broken.json'
        broken.write_text('{"schema": 1, "fidelity": ')
        assert returncode('solve', str(broken)) == 2
        assert returncode('solve', str(tmp_path / 'missing.json')) == 2
        assert returncode('solve', problem_file, '--psi', 'shannon') == 4
        assert returncode('solve', problem_file, '--step', 'fixed:1.5') == 2
        assert returncode('solve', problem_file, '--x0', '1,2,3') == 2

    def test_wrong_schema_version(self, write_problem, problem_payload):
        path = write_problem({**problem_payload, 'schema': 2}, 'v2.json')
        assert returncode('solve', path) == 2


class TestCalibrateCommand:

    def test_calibrate(self, problem_file):
        data = json.loads(run('calibrate', problem_file, '--psi', 'power:3/2'))
        expected = 0.75 ** 0.25 * 10.0 ** 0.75
        assert data['gamma_thr'] == pytest.approx([expected, expected])
        assert data['is_exact'] is True

    def test_manual_gamma_below_threshold(self, problem_file):
        data = json.loads(run('calibrate', problem_file, '--gamma', 'list:5,20'))
        assert data['mode'] == 'manual'
        assert data['exact'] == [False, True]


class TestEnumerateCommand:

    def test_enumerate_with_side_table(self, problem_file, tmp_path):
        table = tmp_path / 'minimizers.csv'
        data = json.loads(run('enumerate', problem_file, '--psi', 'power:2', '--csv', str(table)))
        assert data['count'] == 4
        rows = read_csv(table)
        assert rows[0] == ['rank', 'support', 'J0', 'strict', 'preserved', 'x']
        assert rows[1][1] == '1'
        assert rows[1][4] == 'True'
        assert rows[2][1] == '0;1'
        assert [float(v) for v in rows[1][5].split(';')] == pytest.approx([0.0, 0.7])
        assert rows[4][1] == ''

    def test_limit(self, problem_file):
        assert returncode('enumerate', problem_file, '--max-support', '3') == 2


class TestLandscapeCommand:

    def test_two_dimensional_grid(self, problem_file, tmp_path):
        grid = tmp_path / 'grid.csv'
        minimizers = tmp_path / 'minimizers.csv'
        trajectory = tmp_path / 'trajectory.csv'
        run(
            'landscape', problem_file, '--points', '5', '--bounds=-1,1', '--out', str(grid),
            '--minimizers', str(minimizers), '--trajectory', str(trajectory), '--x0', '0.5,0.5',
        )
        rows = read_csv(grid)
        assert rows[0] == ['x1', 'x2', 'J0', 'JPsi']
        values = np.array(rows[1:], dtype=float)
        axis = np.unique(values[:, 0])
        assert len(values) == axis.size ** 2
        assert np.any(np.isclose(axis, 0.7)) and np.any(np.isclose(axis, 0.125))
        assert np.all(values[:, 3] <= values[:, 2] + 1e-12)
        assert len(read_csv(minimizers)) == 5
        path = read_csv(trajectory)
        assert path[0] == ['iter', 'x1', 'x2', 'J0', 'JPsi']
        assert [float(v) for v in path[1][1:3]] == [0.5, 0.5]

    def test_stdout_and_one_dimension(self, write_problem, problem_payload):
        path = write_problem({**problem_payload, 'A': [[3.0], [1.0]]}, 'scalar.json')
        out = run('landscape', path, '--points', '11')
        lines = out.strip().splitlines()
        assert lines[0] == 'x1,J0,JPsi'
        assert len(lines) > 11

    def test_too_many_coordinates(self, write_problem, problem_payload, tmp_path):
        path = write_problem({**problem_payload, 'A': [[3.0, 1.0, 0.5], [1.0, 3.0, 0.5]]}, 'wide.json')
        assert returncode('landscape', path) == 2
        assert returncode('landscape', str(tmp_path / 'missing.json'), '--bounds', '1,0') == 2


class TestGenCommand:

    @pytest.mark.parametrize('kind', ['LS', 'LR', 'KL'])
    def test_generated_file_loads(self, kind, tmp_path):
        out = tmp_path / f'{kind}.json'
        run('gen', '--kind', kind, '--M', '20', '--N', '10', '--k', '2', '--seed', '4',
            '--lambda0-scale', '0.01', '--out', str(out))
        problem = load_problem(out)
        assert problem.A.shape == (20, 10)
        assert np.count_nonzero(problem.x_true) == 2
        assert problem.nonneg == (kind == 'KL')

    def test_deterministic_stdout(self):
        args = ('gen', '--M', '5', '--N', '4', '--k', '1', '--seed', '9')
        assert run(*args) == run(*args)

    def test_invalid_sparsity(self):
        assert returncode('gen', '--M', '5', '--N', '4', '--k', '6') == 2


class TestBenchmarkCommand:

    def test_small_benchmark(self, tmp_path):
        table = tmp_path / 'bench.csv'
        data = json.loads(run(
            'benchmark', '--M', '20', '--N', '30', '--k', '3', '--eta', '0.5', '--instances', '3',
            '--methods', 'l0,power:2', '--lambda0-scale', '0.01', '--workers', '2', '--csv', str(table),
        ))
        assert data['methods'] == ['l0', 'power:2']
        for method in data['methods']:
            assert sum(data['rank_counts'][method]) == 3
            assert data['recovery'][method]['failures'] == 0
        rows = read_csv(table)
        assert rows[0] == ['instance', 'method', 'J0', 'rank', 'seconds', 'f1', 'rmse', 'status']
        assert [int(r[0]) for r in rows[1:]] == [0, 0, 1, 1, 2, 2]
        assert all(r[7] == 'ok' for r in rows[1:])

    def test_bad_methods(self):
        assert returncode('benchmark', '--instances', '1', '--methods', 'l0,l0') == 2
        assert returncode('benchmark', '--instances', '1', '--methods', 'power:x') == 2


class TestSelfcheckCommand:

    def test_selfcheck_passes(self):
        out = run('selfcheck', '--points', '7')
        assert 'FAIL' not in out
        assert 'lambert_w branch 0' in out


@pytest.mark.slow
def test_relaxation_beats_direct_l0_on_correlated_designs():
    config = DataGenConfig('LS', 100, 300, 10, eta=0.9, tau=8.0, seed=0)
    report = run_benchmark(config, ['l0', 'power:2'], 20, lambda0_scale=4e-3)
    l0 = {r.instance: r.j0 for r in report.for_method('l0')}
    brex = {r.instance: r.j0 for r in report.for_method('power:2')}
    not_worse = sum(1 for i in brex if brex[i] <= l0[i] * (1.0 + 1e-9))
    better = sum(1 for i in brex if brex[i] < l0[i] * (1.0 - 1e-9))
    assert not_worse >= 12
    assert better >= 6
