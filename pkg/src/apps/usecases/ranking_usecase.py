"""
Similarity ranking of unlabeled images against a target mask.

Unlabeled images are pseudo-labeled by the segmenter; pseudo-labels and the
target mask are both colored with per-class mean intensities and compared by
mean squared error (lower = more similar).
"""
import logging
import math

import numpy as np
import torch

from src.apps.config import CLASS_NAMES, NUM_CLASSES
from src.apps.core.tensor_ops import as_mask_tensor
from src.apps.models.ranking_model import ClassMeans, RankedList
from src.apps.networks.unet import segment
from src.apps.utils.exceptions import ClassAbsentError, EmptyPoolError, ShapeMismatchError

logger = logging.getLogger(__name__)

PREDICT_BATCH = 32


def _as_array(x, dtype):
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    return np.asarray(x, dtype=dtype)


def compute_class_means(samples):
    """
    samples: iterable of (internal image, mask). Per-class pooled mean intensity.
    Per-image partial sums are combined with an exactly rounded sum, so the
    result does not depend on record order.
    """
    partials = [[] for _ in range(NUM_CLASSES)]
    counts = [0] * NUM_CLASSES
    for image, mask in samples:
        image = _as_array(image, np.float64)
        mask = _as_array(mask, np.int64)
        if image.shape != mask.shape:
            raise ShapeMismatchError(f"Image {image.shape} and mask {mask.shape} differ")
        for cls in range(NUM_CLASSES):
            selected = mask == cls
            count = int(selected.sum())
            if count:
                partials[cls].append(float(image[selected].sum()))
                counts[cls] += count
    missing = [CLASS_NAMES[cls] for cls in range(NUM_CLASSES) if counts[cls] == 0]
    if missing:
        raise ClassAbsentError(missing)
    return ClassMeans(tuple(math.fsum(partials[cls]) / counts[cls] for cls in range(NUM_CLASSES)))


def colorize_mask(mask, means):
    """Replaces every pixel's class by that class's mean intensity (float64 tensor)."""
    lookup = torch.tensor(means.values, dtype=torch.float64)
    return lookup[as_mask_tensor(mask)]


def mask_mse(a, b):
    a = torch.as_tensor(a, dtype=torch.float64)
    b = torch.as_tensor(b, dtype=torch.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"Cannot compare images of shapes {tuple(a.shape)} and {tuple(b.shape)}")
    return float(((a - b) ** 2).mean())


def predict_masks(images, segmenter, batch_size=PREDICT_BATCH):
    """Pseudo-labels (uint8 arrays) for a list of internal images, in input order."""
    was_training = segmenter.training
    segmenter.eval()
    device = next(segmenter.parameters()).device
    masks = []
    try:
        with torch.no_grad():
            for start in range(0, len(images), batch_size):
                batch = torch.stack([torch.as_tensor(img) for img in images[start:start + batch_size]]).to(device)
                logits = segment(batch, segmenter)
                masks.extend(m.cpu().numpy().astype(np.uint8) for m in logits.argmax(dim=1))
    finally:
        segmenter.train(was_training)
    return masks


def rank_candidates(target_mask, pool, segmenter, means, cache=None):
    """
    pool: list of (image relpath, internal image). Returns the pool ranked by
    colorized-mask MSE against the target. Pseudo-labels are read from and written to `cache` when given.
    """
    if not pool:
        raise EmptyPoolError("Cannot rank an empty candidate pool")
    labels = {}
    todo = []
    for path, image in pool:
        cached = cache.get(path) if cache is not None else None
        if cached is not None:
            labels[path] = cached
        else:
            todo.append((path, image))
    if todo:
        predicted = predict_masks([image for _, image in todo], segmenter)
        for (path, _), mask in zip(todo, predicted):
            labels[path] = mask
            if cache is not None:
                cache.put(path, mask)

    target = colorize_mask(target_mask, means)
    scored = [(path, mask_mse(colorize_mask(labels[path], means), target)) for path, _ in pool]
    return RankedList.from_scores(scored)


class RankingUseCase:
    """
    Dataset-level ranking: class means from the labeled train split, per-person
    pools of unlabeled images, pseudo-label caching.
    """
    def __init__(self, dataset_repo, pseudo_label_repo, segmenter):
        self.dataset_repo = dataset_repo
        self.pseudo_label_repo = pseudo_label_repo
        self.segmenter = segmenter
        self.index = dataset_repo.load_index()
        self._means = None

    def class_means(self):
        if self._means is None:
            labeled = self.index.labeled('train') or self.index.labeled()
            samples = (
                (self.dataset_repo.load_image(r.img), self.dataset_repo.load_mask(r.mask)) for _, r in labeled
            )
            self._means = compute_class_means(samples)
            logger.info(f"Class means: {', '.join(f'{n}={v:.4f}' for n, v in zip(CLASS_NAMES, self._means.values))}")
        return self._means

    def person_pool(self, person_id, exclude=()):
        return [
            (r.img, self.dataset_repo.load_image(r.img))
            for _, r in self.index.unlabeled(person_id) if r.img not in exclude
        ]

    def pseudo_label(self, img_relpath):
        cached = self.pseudo_label_repo.get(img_relpath)
        if cached is not None:
            return cached
        mask = predict_masks([self.dataset_repo.load_image(img_relpath)], self.segmenter)[0]
        self.pseudo_label_repo.put(img_relpath, mask)
        return mask

    def pseudo_label_all(self):
        """
        Fills the cache for every unlabeled image, one person's pool per batch as
        `rank_person` does. Returns how many were newly predicted.
        """
        predicted = 0
        for person in self.index.persons:
            pool = [r.img for _, r in self.index.unlabeled(person.id)]
            if not pool or all(self.pseudo_label_repo.get(path) is not None for path in pool):
                continue
            images = [self.dataset_repo.load_image(path) for path in pool]
            for path, mask in zip(pool, predict_masks(images, self.segmenter)):
                self.pseudo_label_repo.put(path, mask)
            predicted += len(pool)
        logger.info(f"Pseudo-labeled {predicted} images ({len(self.index.unlabeled()) - predicted} cached).")
        return predicted

    def rank_person(self, target_mask, person_id, exclude=()):
        pool = self.person_pool(person_id, exclude)
        return rank_candidates(target_mask, pool, self.segmenter, self.class_means(), self.pseudo_label_repo)

    def rank_all(self, splits=('train', 'val', 'test')):
        """Ranked same-person pool for every labeled record in the given splits."""
        rankings = {}
        for person_id, record in self.index.labeled():
            if record.split not in splits:
                continue
            target = self.dataset_repo.load_mask(record.mask)
            try:
                rankings[record.img] = self.rank_person(target, person_id, exclude=(record.img,))
            except EmptyPoolError:
                logger.warning(f"Person {person_id} has no unlabeled images; no ranking for {record.img}.")
        logger.info(f"Ranked pools for {len(rankings)} targets.")
        return rankings
