from django.apps import AppConfig


class ProxConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'prox'
