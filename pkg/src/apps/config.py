# src\apps\config.py

# Application-wide defaults. Anything that can differ per machine is read from the
# environment (optionally via a .env file) with the defaults below as fallback.
import os
import logging
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

NUM_CLASSES = 4
CLASS_NAMES = ('background', 'sclera', 'iris', 'pupil')

DEFAULT_RESOLUTION = 64
DEFAULT_STYLE_DIM = 64
DEFAULT_EPS = 1e-5
LEAKY_SLOPE = 0.2

CHECKPOINT_FORMAT_VERSION = 1
MODEL_KINDS = ('segmenter', 'refiner', 'gan')

GRID_COLUMNS = 4
RESIDUAL_GRAY_OFFSET = 128

DEFAULT_CACHE_DIR = '.seg2eye_cache'


def get_cache_dir():
    """
    Pseudo-label cache root. SEG2EYE_CACHE_DIR overrides the default.
    """
    cache_dir = os.getenv('SEG2EYE_CACHE_DIR')
    if not cache_dir:
        logger.debug(f"SEG2EYE_CACHE_DIR not set. Using default cache dir '{DEFAULT_CACHE_DIR}'.")
        return DEFAULT_CACHE_DIR
    return cache_dir


def get_log_level():
    return os.getenv('SEG2EYE_LOG_LEVEL', 'INFO').upper()
