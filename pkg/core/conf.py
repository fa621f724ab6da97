from django.conf import settings

DEFAULTS = {
    'THREADS': 1,
    'CERT_TOL': 1e-6,
    'INTERVAL_SLACK': 1e-8,
    'MAX_ITER': 5000,
    'REL_TOL': 1e-6,
    'ENUM_LIMIT': 10**6,
    'ENUM_MAX_N': 20,
}


def brex_setting(name):
    """Lê `settings.BREX[name]`, com o padrão embutido quando o projeto não está configurado."""
    if name not in DEFAULTS:
        raise KeyError(name)
    if not settings.configured:
        return DEFAULTS[name]
    return getattr(settings, 'BREX', {}).get(name, DEFAULTS[name])
