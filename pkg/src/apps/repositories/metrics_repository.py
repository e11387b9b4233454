import json
import logging
from pathlib import Path

from src.apps.utils.exceptions import DatasetIOError

logger = logging.getLogger(__name__)


class MetricsRepository:
    """
    Append-only JSON-lines log, one record per training step.
    """
    def __init__(self, path):
        self.path = Path(path)

    def reset(self):
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text('', encoding='utf-8')
        except OSError as e:
            raise DatasetIOError(self.path, f"Cannot create metrics log ({e})") from e

    def truncate_after(self, step):
        """Drops records beyond `step`, so a resumed run continues the log where the checkpoint left it."""
        if not self.path.exists():
            return self.reset()
        kept = [r for r in self.read() if r.get('step', -1) <= step]
        try:
            self.path.write_text(''.join(json.dumps(r) + '\n' for r in kept), encoding='utf-8')
        except OSError as e:
            raise DatasetIOError(self.path, f"Cannot rewrite metrics log ({e})") from e

    def append(self, record):
        try:
            with open(self.path, 'a', encoding='utf-8') as handle:
                handle.write(json.dumps(record) + '\n')
        except OSError as e:
            logger.error(f"Failed to append to metrics log {self.path}: {e}")
            raise DatasetIOError(self.path, f"Cannot append to metrics log ({e})") from e

    def read(self):
        try:
            lines = self.path.read_text(encoding='utf-8').splitlines()
        except OSError as e:
            raise DatasetIOError(self.path, f"Cannot read metrics log ({e})") from e
        return [json.loads(line) for line in lines if line.strip()]
