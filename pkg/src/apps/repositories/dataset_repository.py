import json
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from src.apps.core.tensor_ops import to_internal
from src.apps.models.dataset_model import DatasetIndex
from src.apps.utils.exceptions import DatasetIOError, OutOfRangeError

logger = logging.getLogger(__name__)

INDEX_FILE = 'index.json'
GROUNDTRUTH_DIR = 'groundtruth'


def read_png(path):
    """
    Reads an 8-bit single-channel PNG into a uint8 array.
    """
    try:
        with Image.open(path) as img:
            if img.mode != 'L':
                img = img.convert('L')
            return np.array(img, dtype=np.uint8)
    except (OSError, ValueError) as e:
        logger.error(f"Failed to read PNG {path}: {e}")
        raise DatasetIOError(path, f"Cannot read PNG ({e})") from e


def write_png(path, array):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.ascontiguousarray(array, dtype=np.uint8)).save(path, format='PNG')
    except OSError as e:
        logger.error(f"Failed to write PNG {path}: {e}")
        raise DatasetIOError(path, f"Cannot write PNG ({e})") from e


def read_mask(path):
    mask = read_png(path)
    if mask.size and mask.max() > 3:
        raise OutOfRangeError(f"Mask {path} contains class value {int(mask.max())}")
    return mask


def read_image(path):
    """Internal-range float tensor [H, W]."""
    return to_internal(read_png(path))


class DatasetRepository:
    """
    Access to a dataset root laid out as index.json + p<id>/img_<n>.png + p<id>/mask_<n>.png,
    with withheld masks under groundtruth/.
    """
    def __init__(self, root):
        self.root = Path(root)

    @staticmethod
    def image_relpath(person_id, n):
        return f"p{person_id}/img_{n}.png"

    @staticmethod
    def mask_relpath(person_id, n):
        return f"p{person_id}/mask_{n}.png"

    @staticmethod
    def groundtruth_relpath(person_id, n):
        return f"{GROUNDTRUTH_DIR}/p{person_id}/mask_{n}.png"

    def path(self, relpath):
        return self.root / relpath

    def write_sample(self, relpath, array):
        write_png(self.path(relpath), array)

    def load_image(self, relpath):
        return read_image(self.path(relpath))

    def load_mask(self, relpath):
        return read_mask(self.path(relpath))

    def load_groundtruth_mask(self, img_relpath):
        """Withheld mask of an unlabeled record, for evaluation only."""
        relpath = Path(GROUNDTRUTH_DIR) / Path(img_relpath).parent / Path(img_relpath).name.replace('img_', 'mask_')
        return read_mask(self.root / relpath)

    def save_index(self, index):
        path = self.root / INDEX_FILE
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(index.to_dict(), indent=2), encoding='utf-8')
            logger.info(f"Wrote dataset index with {len(index.persons)} persons to {path}.")
        except OSError as e:
            logger.error(f"Failed to write dataset index {path}: {e}", exc_info=True)
            raise DatasetIOError(path, f"Cannot write index ({e})") from e

    def load_index(self):
        path = self.root / INDEX_FILE
        try:
            return DatasetIndex.from_dict(json.loads(path.read_text(encoding='utf-8')))
        except OSError as e:
            raise DatasetIOError(path, f"Cannot read index ({e})") from e
        except (KeyError, ValueError) as e:
            raise DatasetIOError(path, f"Malformed index ({e})") from e
