from django.urls import path

from core.api import api

# Mesmas rotas do projeto, montadas em /api/ para o client de testes
urlpatterns = [
    path('api/', api.urls),
]
