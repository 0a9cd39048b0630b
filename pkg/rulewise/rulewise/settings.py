from decouple import config, Csv
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


SECRET_KEY = config('SECRET_KEY', default='rulewise-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'cohort',
    'toystrata',
    'forest',
    'rist',
    'learners',
    'valueeval',
    'synthgen',
    'pipeline',
]

# Command-line only: no database, no URLconf.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
}


# Estimation defaults read by the management commands.
RULEWISE = {
    'SEED': config('RULEWISE_SEED', default=20240101, cast=int),
    'N_JOBS': config('RULEWISE_N_JOBS', default=1, cast=int),
    'OUTPUT_DIR': config('RULEWISE_OUTPUT_DIR', default='output'),
    'CLIP': config('RULEWISE_CLIP', default=0.01, cast=float),
    'FOLDS': config('RULEWISE_FOLDS', default=10, cast=int),
    'HORIZONS': config('RULEWISE_HORIZONS', default='30,180,365', cast=Csv(float)),
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
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
        name: {
            'handlers': ['console'],
            'level': config('RULEWISE_LOG_LEVEL', default='INFO'),
            'propagate': False,
        }
        for name in (
            'cohort', 'toystrata', 'forest', 'rist',
            'learners', 'valueeval', 'synthgen', 'pipeline',
        )
    },
}
