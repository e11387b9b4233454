import logging
from pathlib import Path

from src.apps.repositories.dataset_repository import read_mask, write_png

logger = logging.getLogger(__name__)


class PseudoLabelRepository:
    """
    On-disk pseudo-label cache: cache_dir/<checkpoint_hash>/<image_relpath>.png.
    Keyed by the segmenter checkpoint hash, so a retrained segmenter never reads stale labels.
    """
    def __init__(self, cache_dir, checkpoint_hash):
        self.cache_dir = Path(cache_dir)
        self.checkpoint_hash = checkpoint_hash

    def path(self, img_relpath):
        return self.cache_dir / self.checkpoint_hash / f"{img_relpath}.png"

    def get(self, img_relpath):
        path = self.path(img_relpath)
        if not path.exists():
            return None
        return read_mask(path)

    def put(self, img_relpath, mask):
        write_png(self.path(img_relpath), mask)
        logger.debug(f"Cached pseudo-label for {img_relpath}.")
