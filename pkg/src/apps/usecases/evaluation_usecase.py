import logging
from pathlib import Path

from src.apps.losses.metrics import challenge_metric, dataset_score
from src.apps.repositories.dataset_repository import read_png
from src.apps.utils.exceptions import DatasetIOError, MissingPairsError

logger = logging.getLogger(__name__)


def _png_names(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetIOError(directory, "Not a directory")
    return {path.name for path in directory.glob('*.png')}


def evaluate_dirs(pred_dir, target_dir):
    """
    Challenge metric for every same-named PNG pair and their mean.
    Every file must have a partner in the other directory.
    """
    preds, targets = _png_names(pred_dir), _png_names(target_dir)
    missing = [f"{pred_dir}/{n}" for n in targets - preds] + [f"{target_dir}/{n}" for n in preds - targets]
    if missing:
        raise MissingPairsError(missing)
    if not preds:
        raise DatasetIOError(pred_dir, "No PNG files to evaluate")
    per_image = {
        name: challenge_metric(read_png(Path(pred_dir) / name), read_png(Path(target_dir) / name))
        for name in sorted(preds)
    }
    mean = dataset_score(per_image.values())
    logger.info(f"Evaluated {len(per_image)} image pairs, mean challenge metric {mean:.6f}.")
    return {'per_image': per_image, 'mean': mean}
