"""Settings of the IRS channel estimation simulator and its API."""

import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent


# Local development defaults; set IRSCE_SECRET_KEY and IRSCE_DEBUG=0 when deployed.
SECRET_KEY = os.environ.get('IRSCE_SECRET_KEY', 'django-insecure-7q!m2x#irsce-local-only-k1k2@f9t0$w3h8c^d')

DEBUG = os.environ.get('IRSCE_DEBUG', '1') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1', '0.0.0.0']


INSTALLED_APPS = [
    'channelest',
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'rest_framework',
    'drf_spectacular',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'irsce.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'irsce.wsgi.application'


# Stored runs and report rows
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.environ.get('IRSCE_DB_PATH', BASE_DIR / 'irsce.sqlite3'),
    }
}


LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True


STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework settings
REST_FRAMEWORK = {
    'DEFAULT_SCHEMA_CLASS': 'drf_spectacular.openapi.AutoSchema',
    'DEFAULT_AUTHENTICATION_CLASSES': [
        'rest_framework.authentication.SessionAuthentication',
        'rest_framework.authentication.BasicAuthentication',
    ],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.IsAuthenticated',
    ],
}

# Swagger/OpenAPI settings
SPECTACULAR_SETTINGS = {
    'TITLE': 'IRS Channel Estimation API',
    'DESCRIPTION': 'Monte-Carlo channel estimation experiments for IRS-assisted multi-user OFDMA uplinks',
    'VERSION': '1.0.0',
    'SERVE_INCLUDE_SCHEMA': False,
    'COMPONENT_SPLIT_REQUEST': True,
    'SCHEMA_PATH_PREFIX': '/api/',
    'TAGS': [
        {'name': 'limits', 'description': 'User capacity and scheme selection'},
        {'name': 'runs', 'description': 'Experiment runs and their reports'},
    ],
}

# Scenario defaults of the simulator; every key can be overridden in a config file.
IRSCE = {
    'N': 16,
    'M': 8,
    'M0': 128,
    'Ld': 4,
    'Lcp': 6,
    'decay': 2.0,
    'kappa_db': 4.5,
    'sigma2_dbm': -80.0,
    'gamma0_db': -30.0,
    'alpha1': 2.2,
    'alpha2': 2.4,
    'alpha3': 3.5,
    'D1': 1.5,
    'D2': 50.0,
    'trials': 10000,
    'seed': 2020,
    'cap': 10**6,
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'channelest': {
            'handlers': ['console'],
            'level': os.environ.get('IRSCE_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
