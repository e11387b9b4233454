import json
import logging
from pathlib import Path

from src.apps.models.ranking_model import ClassMeans, RankedList
from src.apps.utils.exceptions import DatasetIOError

logger = logging.getLogger(__name__)


def _write_json(path, payload):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2), encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}", exc_info=True)
        raise DatasetIOError(path, f"Cannot write JSON ({e})") from e


def _read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise DatasetIOError(path, f"Cannot read JSON ({e})") from e
    except ValueError as e:
        raise DatasetIOError(path, f"Malformed JSON ({e})") from e


class RankingRepository:
    """
    Ranked lists per target image ({"<target img>": [{"img", "score", "rank"}, ...]})
    and the class means they were scored with.
    """
    def save_ranked_list(self, path, ranked):
        _write_json(path, ranked.to_list())

    def save_rankings(self, path, rankings):
        _write_json(path, {target: ranked.to_list() for target, ranked in sorted(rankings.items())})
        logger.info(f"Saved rankings for {len(rankings)} targets to {path}.")

    def load_rankings(self, path):
        data = _read_json(path)
        return {target: RankedList.from_list(entries) for target, entries in data.items()}

    def save_class_means(self, path, means):
        _write_json(path, means.to_dict())

    def load_class_means(self, path):
        return ClassMeans.from_dict(_read_json(path))
