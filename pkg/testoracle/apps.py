from django.apps import AppConfig


class TestoracleConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'testoracle'
