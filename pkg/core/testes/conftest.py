import json

import pytest
from django.conf import settings
from django.urls import clear_url_caches, set_urlconf


# Registra os URLs da API para os testes HTTP
@pytest.fixture(scope='session', autouse=True)
def register_api_urls():
    # usa o urls.py específico dos testes
    settings.ROOT_URLCONF = 'core.testes.urls'
    clear_url_caches()
    set_urlconf(None)


@pytest.fixture
def problem_payload():
    """Instância LS 2x2 com minimizador global em (0, 0.7) e J_0 = 0.55."""
    return {
        'schema': 1,
        'fidelity': {'kind': 'LS', 'y': [1.0, 2.0]},
        'A': [[3.0, 1.0], [1.0, 3.0]],
        'lambda0': 0.5,
    }


@pytest.fixture
def write_problem(tmp_path):
    def write(payload, name='problem.json'):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)
    return write


@pytest.fixture
def problem_file(write_problem, problem_payload):
    return write_problem(problem_payload)
