"""
Django settings for the OrdoLex project.

OrdoLex is a command-line treebank toolkit: there is no database, no URL
routing and no web server. Django provides the settings layer, logging
configuration, management commands and the test runner.

Pipeline defaults live in ``ORDOLEX`` below; a ``--config`` file and
command-line flags override them (see ``utils.config``).
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Nothing is signed or served; Django only insists that the key exists.
SECRET_KEY = os.environ.get('ORDOLEX_SECRET_KEY', 'ordolex-local-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'treebank',
    'analysis',
]

# Treebank analysis keeps everything in TSV/CSV files, nothing in a database.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Pipeline defaults. Keys mirror the flat key=value config file format in
# lower case (VARIANT_CAP <-> cap, GLOBAL_SEED <-> seed, ...).
ORDOLEX = {
    'VARIANT_CAP': 120,
    'GLOBAL_SEED': 0,
    'CV_FOLDS': 10,
    'MAX_N': 5,
    'MIN_PREVERBAL': 2,
    'REQUIRE_PROJECTIVE': True,
    'ROOT_UPOS': ['VERB'],
    'MIN_CORPUS_SENTENCES': 2000,
    'COUNT_PUNCT': True,
    'WORKERS': 1,
    'STRATEGIES': ['reference', 'random', 'ascending', 'descending', 'least_effort'],
    'SEED_ENV_VAR': 'ORDOLEX_SEED',
}

# Models fitted by `manage.py classify`, in report order.
ORDOLEX_MODELS = {
    'cl_last': ['cl_last'],
    'total_dl': ['total_dl'],
    'total_dl+cl_last': ['total_dl', 'cl_last'],
}


LOG_LEVEL = os.environ.get('ORDOLEX_LOG_LEVEL', 'INFO').upper()
LOG_FILE = os.environ.get('ORDOLEX_LOG_FILE')

# Diagnostics go to stderr; stdout is reserved for command summaries.
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {asctime} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'treebank': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'analysis': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'utils': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    for _logger in LOGGING['loggers'].values():
        _logger['handlers'].append('file')
