"""
Django settings for the ghostgrid project.

Only the pieces the imaging toolkit uses are configured: installed apps (for
management command discovery), logging, and the experiment defaults. There is
no database and no URL routing.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.getenv('GHOSTGRID_SECRET_KEY', 'ghostgrid-local-only-not-secret')

DEBUG = os.getenv('GHOSTGRID_DEBUG', 'false').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'imaging',
]

DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Experiment defaults (desk-scale reproduction of the four-method comparison).
# Config files and command-line flags override these, in that order.
IMAGING_DEFAULTS = {
    'size': 128,
    'frames': 10000,
    'seed': 1,
    'repeats': 1,
    'grain_sigma': 1.5,
    'mean_intensity': 1.0,
    'noise_std': 0.0,
    'block': '16x16',
    'alpha': 0.15,
    'levels': 256,
    'object': 'double-slit',
    'pitch_mm': 0.05,
    'slit_width_mm': 0.2,
    'separation_mm': 0.6,
    'slit_height': None,  # None means rows // 2
    'orientation': 'vertical',
    'methods': 'tgi,mbgi,obgi,ppbgi',
    'emit_stack': False,
    'timing': False,
    'compensated': False,
    'workers': int(os.getenv('GHOSTGRID_WORKERS', '1')),
    'out': os.getenv('GHOSTGRID_OUTPUT_DIR', str(BASE_DIR / 'runs')),
}

# Autocorrelation profile value treated as "half maximum" for grain size.
GRAIN_HALF_MAXIMUM = 0.5

# Logging Configuration
LOG_LEVEL = os.getenv('GHOSTGRID_LOG_LEVEL', 'INFO').upper()
LOG_FILE = os.getenv('GHOSTGRID_LOG_FILE')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
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
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
        'imaging': {
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
