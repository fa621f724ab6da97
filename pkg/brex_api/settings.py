"""
Django settings for brex_api project.

Generated by 'django-admin startproject' using Django 4.2.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Quick-start development settings - unsuitable for production
# See https://docs.djangoproject.com/en/4.2/howto/deployment/checklist/

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'BREX_SECRET_KEY',
    'django-insecure-5k1x!q0n3w$l2v@8r#brex-relaxation-dev-only-7f4e9c2a61d0',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('BREX_DEBUG', '1') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1', 'testserver']


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'django.contrib.staticfiles',
    #apps project
    'core',
    'fidelity',
    'generating',
    'calibration',
    'prox',
    'solver',
    'certify',
    'datagen',
    'testoracle',
    #libs
    'ninja',
    'ninja_extra',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'brex_api.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
            ],
        },
    },
]

WSGI_APPLICATION = 'brex_api.wsgi.application'


# Nenhum app persiste dados: os problemas chegam por arquivo JSON ou pela API
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
# https://docs.djangoproject.com/en/4.2/howto/static-files/

STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Parâmetros numéricos da biblioteca (ver core/conf.py para os valores padrão)
BREX = {
    'THREADS': int(os.environ.get('BREX_THREADS', os.cpu_count() or 1)),
    'CERT_TOL': 1e-6,
    'INTERVAL_SLACK': 1e-8,
    'MAX_ITER': 5000,
    'REL_TOL': 1e-6,
    'ENUM_LIMIT': 10**6,
    'ENUM_MAX_N': 20,
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': os.environ.get('BREX_LOG_LEVEL', 'INFO'),
            'propagate': False,
        }
        for app in (
            'core', 'fidelity', 'generating', 'calibration', 'prox',
            'solver', 'certify', 'datagen', 'testoracle',
        )
    },
}
