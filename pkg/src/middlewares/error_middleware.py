import functools
import logging

from src.apps.utils.exceptions import Seg2EyeError, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_USAGE_ERROR = 2


def handle_command_errors(command):
    """
    Wraps a controller command so every failure becomes an exit code:
    usage errors -> 2, pipeline and I/O errors -> 1, anything unexpected -> 1 with a traceback.
    A command returning None counts as success.
    """
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            result = command(*args, **kwargs)
            return EXIT_OK if result is None else result
        except UsageError as e:
            logger.warning(f"Usage error: {e}")
            return EXIT_USAGE_ERROR
        except (Seg2EyeError, ValueError, OSError) as e:
            logger.error(f"{type(e).__name__}: {e}")
            return EXIT_RUNTIME_ERROR
        except Exception as e:
            logger.exception(f"An unexpected error occurred: {e}")
            return EXIT_RUNTIME_ERROR
    return wrapper
