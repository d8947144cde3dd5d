import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SEGBENCH_OUTPUT_DIR = Path(os.getenv('SEGBENCH_OUTPUT_DIR', BASE_DIR / 'results'))
SEGBENCH_WORKERS = int(os.getenv('SEGBENCH_WORKERS', '1'))
SEGBENCH_LOG_LEVEL = os.getenv('SEGBENCH_LOG_LEVEL', 'INFO')

# OptimConfig defaults, overridden per experiment by the JSON config and CLI flags
SEGBENCH_LEARNING_RATE = float(os.getenv('SEGBENCH_LEARNING_RATE', '0.01'))
SEGBENCH_MU = float(os.getenv('SEGBENCH_MU', '1.75'))
SEGBENCH_MOMENTUM = float(os.getenv('SEGBENCH_MOMENTUM', '0.9'))
SEGBENCH_DIVERGENCE_THRESHOLD = float(os.getenv('SEGBENCH_DIVERGENCE_THRESHOLD', '1e6'))


DEBUG = os.getenv('SEGBENCH_DEBUG', '0') == '1'

INSTALLED_APPS = [
    'segbench',
]

DATABASES = {}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'default': {
            'format': '%(asctime)s [%(levelname)s] %(message)s',
            'datefmt': '%Y-%m-%d %H:%M:%S',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'default',
        },
    },
    'loggers': {
        'segbench': {
            'handlers': ['console'],
            'level': SEGBENCH_LOG_LEVEL,
            'propagate': False,
        },
    },
}

LANGUAGE_CODE = 'ja'
TIME_ZONE = 'Asia/Tokyo'
USE_TZ = True
