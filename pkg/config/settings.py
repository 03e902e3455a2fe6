"""
Django settings for prob_tree_project.

The project has no database, urls or templates; Django supplies settings, logging configuration,
management commands and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import json
import logging
import os
import pathlib

from dotenv import find_dotenv, load_dotenv

## load envars ------------------------------------------------------
dotenv_path = pathlib.Path(__file__).resolve().parent.parent.parent / '.env'
if dotenv_path.exists():
    load_dotenv(find_dotenv(str(dotenv_path), raise_error_if_not_found=True), override=True)


log = logging.getLogger(__name__)


## django project settings ------------------------------------------

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR: pathlib.Path = pathlib.Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY: str = os.environ.get('SECRET_KEY', 'prob-tree-not-a-secret')

DEBUG: bool = json.loads(os.environ.get('DEBUG_JSON', 'false'))

ALLOWED_HOSTS: list[str] = json.loads(os.environ.get('ALLOWED_HOSTS_JSON', '[]'))

# Application definition

INSTALLED_APPS: list[str] = [
    'prob_tree_app',
]

## no models anywhere; SimpleTestCase needs no database
DATABASES: dict[str, object] = json.loads(os.environ.get('DATABASES_JSON', '{}'))

LANGUAGE_CODE: str = 'en-us'
TIME_ZONE: str = 'America/New_York'
USE_I18N: bool = True
USE_TZ: bool = False

DEFAULT_AUTO_FIELD: str = 'django.db.models.BigAutoField'

## logging ----------------------------------------------------------
LOG_PATH: str = os.environ.get('LOG_PATH', '')
LOG_LEVEL: str = os.environ.get('LOG_LEVEL', 'INFO')

## reminder:
## "Each 'logger' will pass messages above its log-level to its associated 'handlers',
## ...which will then output messages above the handler's own log-level."
LOGGING_HANDLERS: dict[str, object] = {
    'console': {
        'level': LOG_LEVEL,
        'class': 'logging.StreamHandler',
        'formatter': 'standard',
    },
}
if LOG_PATH:
    LOGGING_HANDLERS['logfile'] = {
        'level': LOG_LEVEL,  # add LOG_LEVEL=DEBUG to the .env file to see debug messages
        'class': 'logging.FileHandler',  # note: configure server to use system's log-rotate to avoid permissions issues
        'filename': LOG_PATH,
        'formatter': 'standard',
    }

LOGGING: dict[str, object] = {
    'version': 1,
    'disable_existing_loggers': True,
    'formatters': {
        'standard': {
            'format': '[%(asctime)s] %(levelname)s [%(module)s-%(funcName)s()::%(lineno)d] %(message)s',
            'datefmt': '%d/%b/%Y %H:%M:%S',
        },
    },
    'handlers': LOGGING_HANDLERS,
    'loggers': {
        'prob_tree_app': {
            'handlers': list(LOGGING_HANDLERS),
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


## app-level settings -----------------------------------------------

## Largest number of events for the classical LP over all worlds
PROBTREE_WORLD_CAP: int = int(os.environ.get('PROBTREE_WORLD_CAP', '20'))

## Largest tree size for random sweeps and scripts
PROBTREE_SWEEP_WORLD_CAP: int = int(os.environ.get('PROBTREE_SWEEP_WORLD_CAP', '12'))

## Largest tree size for positive-model construction
PROBTREE_MODEL_CAP: int = int(os.environ.get('PROBTREE_MODEL_CAP', '20'))

## Classical LPs with more world columns than this are solved in floating point
PROBTREE_EXACT_COLUMN_LIMIT: int = int(os.environ.get('PROBTREE_EXACT_COLUMN_LIMIT', '4096'))
PROBTREE_FLOAT_TOLERANCE: float = float(os.environ.get('PROBTREE_FLOAT_TOLERANCE', '1e-9'))

## Decimal places for the approximate rendering of answers
PROBTREE_DECIMAL_PLACES: int = int(os.environ.get('PROBTREE_DECIMAL_PLACES', '4'))
