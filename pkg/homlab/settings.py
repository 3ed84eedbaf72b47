# Settings for the homlab project.
#
# Numeric defaults are read from the environment (optionally from a .env file)
# so that batch runs can be tuned without touching job files. Precedence used
# by the CLI: command-line flag > job file key > environment > default below.

from pathlib import Path
import logging
import logging.config
import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

logger = logging.getLogger(__name__)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}, using {default}")
        return default


# ============================================================================
# Numerical defaults
# ============================================================================
# Gauss-Hermite order per axis for the 2D oracle integrals
QUAD_ORDER = _env_int('HOMLAB_QUAD_ORDER', 200)

# Gauss-Hermite order for the 1D coefficient integrals of the parity series
SERIES_ORDER = _env_int('HOMLAB_SERIES_ORDER', 120)

# Tail tolerance for series and Schmidt truncation
TOL = _env_float('HOMLAB_TOL', 1e-10)

# Accepted trace deficit of truncated density matrices
TRACE_TOL = _env_float('HOMLAB_TRACE_TOL', 1e-8)

# Hard cap of the Fock-basis dimension
MAX_SCHMIDT_DIM = _env_int('HOMLAB_MAX_SCHMIDT_DIM', 4000)

# Worker threads for sweeps
THREADS = _env_int('HOMLAB_THREADS', 1)


# ============================================================================
# Logging
# ============================================================================
LOG_LEVEL = os.getenv('HOMLAB_LOG_LEVEL', 'INFO').upper()
LOG_FILE = os.getenv('HOMLAB_LOG_FILE')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'biphoton': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'homlab': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': LOG_LEVEL,
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'plain',
    }
    for _name in ('biphoton', 'homlab'):
        LOGGING['loggers'][_name]['handlers'].append('file')


def configure_logging() -> None:
    """Apply the LOGGING dictionary. Called once by the command-line entry point."""
    logging.config.dictConfig(LOGGING)


def read_version() -> str:
    """
    Read version from the VERSION file in the project root.

    Returns:
        str: version number or 'Unknown'
    """
    try:
        with open(BASE_DIR / 'VERSION', 'r', encoding='utf-8', newline=None) as f:
            return f.read().strip()
    except (FileNotFoundError, IOError, OSError) as e:
        logger.warning(f"Could not read VERSION file: {e}")
        return 'Unknown'


VERSION = read_version()
