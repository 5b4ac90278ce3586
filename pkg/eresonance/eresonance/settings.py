# eresonance/settings.py
from decouple import config
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

# Parallelism
ER_THREADS = config('ER_THREADS', default=1, cast=int)

# Validity thresholds ("much less than" is read as ratio <= ER_MUCH_LESS_RATIO)
ER_MUCH_LESS_RATIO = config('ER_MUCH_LESS_RATIO', default=0.2, cast=float)

# Default desk-scale regime
ER_DEFAULT_NU = config('ER_DEFAULT_NU', default=4.0, cast=float)
ER_DEFAULT_ALPHA = config('ER_DEFAULT_ALPHA', default=1.0, cast=float)
ER_DEFAULT_N = config('ER_DEFAULT_N', default=4, cast=int)
ER_DEFAULT_U0 = config('ER_DEFAULT_U0', default=50.0, cast=float)
ER_DEFAULT_NX = config('ER_DEFAULT_NX', default=384, cast=int)
ER_DEFAULT_NY = config('ER_DEFAULT_NY', default=256, cast=int)

# Oracle grid placement
ER_NODES_PER_SCALE = config('ER_NODES_PER_SCALE', default=8, cast=int)
ER_WALL_MARGIN = config('ER_WALL_MARGIN', default=0.2, cast=float)
ER_X_PERIODS = config('ER_X_PERIODS', default=2.25, cast=float)

# Eigensolver
ER_SOLVER_TOL = config('ER_SOLVER_TOL', default=1e-10, cast=float)
ER_SOLVER_MAXITER = config('ER_SOLVER_MAXITER', default=200, cast=int)
ER_INNER_SOLVER = config('ER_INNER_SOLVER', default='ilu-gmres')

# Bounce
ER_MAX_TURNING_RATIO = config('ER_MAX_TURNING_RATIO', default=2.0, cast=float)

# Output
ER_CSV_DIGITS = 17
MANIFEST_SCHEMA_VERSION = 1

# Celery Configuration
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'

# Logging
ER_LOG_LEVEL = config('ER_LOG_LEVEL', default='INFO')
ER_LOG_FILE = config('ER_LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'level': ER_LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'eresonance': {
            'handlers': ['console'],
            'level': ER_LOG_LEVEL,
            'propagate': False,
        },
    },
}
