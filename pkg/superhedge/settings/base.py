from os import environ, path

PROJECT_DIR = path.dirname(path.dirname(path.abspath(__file__)))
BASE_DIR = path.dirname(PROJECT_DIR)


SECRET_KEY = environ.get('SUPERHEDGE_SECRET_KEY', 'superhedge-batch-only')

# Application definition

INSTALLED_APPS = (
    'core',
    'lattice',
    'simulate',
    'analysis',
    'cli',
)

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'autoescape': False,
        },
    },
]

# The engine is batch-only: no database, no URLs.

DATABASES = {}

# Internationalization
# https://docs.djangoproject.com/en/dev/topics/i18n/

LANGUAGE_CODE = 'en'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(name)s %(levelname)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'SuperHedge': {
            'handlers': ['console'],
            'level': 'INFO',
        },
    },
}


# Non-Django settings:

# Fraction of the space step added to the running maximum in the lattice
# terminal condition of running-max claims. A symmetric walk of step dx
# undershoots the continuous supremum by dx/2 on average.
LATTICE_RUNNING_MAX_CORRECTION = 0.5

# Resolution of the auxiliary grid of time-integral claims.
LATTICE_INTEGRAL_POINTS_PER_STEP = 2

# Paths per random substream; part of the generator identifier, do not
# change it without expecting different ensembles for the same seed!
SIMULATION_BLOCK_SIZE = 4096

SIMULATION_FINE_STEPS = 1024

# The hedge grid spacing is dx divided by this. With a volatility ratio of 2,
# binomial steps at the band endpoints and at their midpoint fall on its levels.
HEDGE_GRID_REFINEMENT = 4

# Superhedge tolerance, in units of dx**2.
HEDGE_TOLERANCE_DX2 = 3

DUALITY_SE_MULTIPLIER = 3
DUALITY_TRUNCATION_ALLOWANCE = 0.005

REPORT_OUTPUT_DIR = environ.get('SUPERHEDGE_OUTPUT_DIR', 'reports')
