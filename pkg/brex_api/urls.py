"""
URL configuration for brex_api project.

The `urlpatterns` list routes URLs to views. For more information please see:
    https://docs.djangoproject.com/en/4.2/topics/http/urls/
"""
from django.urls import path
from core.api import api

urlpatterns = [
    path('api/', api.urls),
]
