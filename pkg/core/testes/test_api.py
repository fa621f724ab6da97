import math

import pytest


def post(client, url, payload):
    return client.post(url, payload, content_type='application/json')


class TestCalibrationAPI:

    def test_calibrate(self, client, problem_payload):
        response = post(client, '/api/calibration/', {'problem': problem_payload})
        assert response.status_code == 200
        data = response.json()
        assert data['gamma_thr'] == pytest.approx([10.0, 10.0])
        assert data['is_exact'] is True
        assert data['alpha_plus'] == pytest.approx([math.sqrt(0.1)] * 2)

    def test_matrix_object_form(self, client, problem_payload):
        problem_payload['A'] = {'rows': 2, 'cols': 2, 'data': [3.0, 1.0, 1.0, 3.0]}
        response = post(client, '/api/calibration/', {'problem': problem_payload, 'gamma': 'thrx2'})
        assert response.status_code == 200
        assert response.json()['gamma'] == pytest.approx([20.0, 20.0])

    def test_infinite_bounds_are_null(self, client, problem_payload):
        problem_payload['constraint'] = 'nonneg'
        response = post(client, '/api/calibration/', {'problem': problem_payload, 'psi': 'shannon'})
        assert response.status_code == 200
        data = response.json()
        assert data['ell_plus'] == [None, None]
        assert data['ell_minus'] == [None, None]

    def test_unsupported_pairing(self, client, problem_payload):
        response = post(client, '/api/calibration/', {'problem': problem_payload, 'psi': 'shannon'})
        assert response.status_code == 400
        assert 'reals' in response.json()['detail']

    def test_bad_generator_spec(self, client, problem_payload):
        response = post(client, '/api/calibration/', {'problem': problem_payload, 'psi': 'power:abc'})
        assert response.status_code == 400

    def test_dimension_mismatch(self, client, problem_payload):
        problem_payload['fidelity']['y'] = [1.0, 2.0, 3.0]
        response = post(client, '/api/calibration/', {'problem': problem_payload})
        assert response.status_code == 400


class TestSolverAPI:

    def test_brex_solve(self, client, problem_payload):
        response = post(client, '/api/solver/', {
            'problem': problem_payload, 'step': 'fixed', 'with_trace': True,
        })
        assert response.status_code == 200
        data = response.json()
        assert data['penalty'] == 'brex'
        assert data['stop_reason'] == 'tolerance'
        assert data['J0_thresholded'] == pytest.approx(0.55, abs=1e-6)
        assert data['cert']['support'] == [1]
        assert data['cert']['is_localmin_j0'] is True
        assert len(data['trace']) == data['iterations']
        assert data['calibration']['gamma_thr'] == pytest.approx([10.0, 10.0])

    def test_l0_solve(self, client, problem_payload):
        response = post(client, '/api/solver/', {'problem': problem_payload, 'penalty': 'l0'})
        assert response.status_code == 200
        data = response.json()
        assert data['JPsi'] is None
        assert data['calibration'] is None
        assert data['cert']['is_critical_jpsi'] is None
        assert data['trace'] == []

    def test_bad_penalty_and_x0(self, client, problem_payload):
        response = post(client, '/api/solver/', {'problem': problem_payload, 'penalty': 'l1'})
        assert response.status_code == 400
        response = post(client, '/api/solver/', {'problem': problem_payload, 'x0': [1.0]})
        assert response.status_code == 400


class TestCertifyAPI:

    def test_check_relaxed(self, client, problem_payload):
        response = post(client, '/api/certify/check', {'problem': problem_payload, 'x': [0.0, 0.7]})
        assert response.status_code == 200
        data = response.json()
        assert data['is_localmin_jpsi'] is True
        assert data['is_strict'] is True

    def test_check_l0_only(self, client, problem_payload):
        response = post(client, '/api/certify/check', {
            'problem': problem_payload, 'x': [0.5, 0.0], 'psi': None,
        })
        assert response.status_code == 200
        data = response.json()
        assert data['is_localmin_j0'] is True
        assert data['is_localmin_jpsi'] is None

    def test_enumerate(self, client, problem_payload):
        response = post(client, '/api/certify/enumerate', {'problem': problem_payload, 'psi': 'power:2'})
        assert response.status_code == 200
        data = response.json()
        assert data['count'] == 4
        assert data['global_J0'] == pytest.approx(0.55)
        first = data['minimizers'][0]
        assert first['rank'] == 1
        assert first['support'] == [1]
        assert first['preserved'] is True
        assert [m['preserved'] for m in data['minimizers'][1:]] == [False, False, False]

    def test_enumerate_limit(self, client, problem_payload):
        response = post(client, '/api/certify/enumerate', {'problem': problem_payload, 'max_support': 5})
        assert response.status_code == 400


class TestInstanceAPI:

    def test_create_ls_instance(self, client):
        response = post(client, '/api/instances/', {
            'kind': 'LS', 'M': 400, 'N': 30, 'k': 5, 'eta': 0.5, 'seed': 7, 'lambda0_scale': 0.01,
        })
        assert response.status_code == 201
        data = response.json()
        problem = data['problem']
        assert problem['schema'] == 1
        assert len(problem['A']) == 400 and len(problem['A'][0]) == 30
        assert sum(1 for v in problem['x_true'] if v != 0) == 5
        assert data['snr_db'] == pytest.approx(8.0, abs=1.5)

    def test_kl_instance_round_trips_into_calibration(self, client):
        created = post(client, '/api/instances/', {'kind': 'KL', 'M': 6, 'N': 4, 'k': 2, 'seed': 3})
        problem = created.json()['problem']
        assert problem['constraint'] == 'nonneg'
        assert created.json()['snr_db'] is None
        response = post(client, '/api/calibration/', {'problem': problem, 'psi': 'kl'})
        assert response.status_code == 200

    def test_invalid_instance(self, client):
        response = post(client, '/api/instances/', {'kind': 'LS', 'M': 5, 'N': 3, 'k': 4})
        assert response.status_code == 400
