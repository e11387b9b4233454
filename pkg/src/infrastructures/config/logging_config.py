import logging

from src.apps.config import get_log_level

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level=None):
    """
    Installs a single stream handler on the root logger. Safe to call more than once.
    """
    level = level or get_log_level()
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    # PIL logs every PNG chunk at DEBUG
    logging.getLogger('PIL').setLevel(logging.WARNING)
