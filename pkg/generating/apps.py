from django.apps import AppConfig


class GeneratingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'generating'
