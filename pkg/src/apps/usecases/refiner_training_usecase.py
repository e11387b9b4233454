"""
Refiner stage: learns a residual that moves the best-ranked same-person image
towards the target image, given the target mask and the reference's pseudo-label.
"""
import logging

import torch

from src.apps.core.tensor_ops import to_disk
from src.apps.losses.consistency import refiner_loss
from src.apps.losses.metrics import challenge_metric, dataset_score
from src.apps.networks.unet import refine
from src.apps.usecases.training_usecase import BaseTrainer
from src.apps.utils.exceptions import EmptySplitError

logger = logging.getLogger(__name__)


def reference_pairs(index, rankings, split):
    """
    (target record, rank-1 reference path) for every labeled record of `split`.
    Records without a ranking are skipped with a warning.
    """
    pairs = []
    for _, record in index.labeled(split):
        ranked = rankings.get(record.img)
        if not ranked or not len(ranked):
            logger.warning(f"No ranking for {record.img}; skipping it.")
            continue
        pairs.append((record, ranked.entries[0].img))
    return pairs


class RefinerTrainer(BaseTrainer):
    kind = 'refiner'

    def __init__(self, config, dataset_repo, checkpoint_repo, ranking_usecase, rankings):
        self.ranking_usecase = ranking_usecase
        self.rankings = rankings
        super().__init__(config, dataset_repo, checkpoint_repo)

    def _load_split(self, split):
        pairs = reference_pairs(self.index, self.rankings, split)
        if not pairs:
            return None
        load_image = self.dataset_repo.load_image
        return {
            'target_masks': self.load_stack([r.mask for r, _ in pairs], self.dataset_repo.load_mask).long(),
            'targets': self.load_stack([r.img for r, _ in pairs], load_image),
            'refs': self.load_stack([ref for _, ref in pairs], load_image),
            'ref_masks': self.load_stack([ref for _, ref in pairs], self.ranking_usecase.pseudo_label).long(),
        }

    def prepare(self):
        self.train_data = self._load_split('train')
        if self.train_data is None:
            raise EmptySplitError("No labeled train record has a ranking; cannot train the refiner")
        self.val_data = self._load_split('val')
        logger.info(f"Refiner data: {len(self.train_data['targets'])} training pairs.")

    def train_step(self, step):
        data = self.train_data
        idx = torch.as_tensor(self.batch_indices(self.step_rng(step), len(data['targets'])))
        optimizer = self.optimizers['main']
        optimizer.zero_grad()
        _, refined = refine(data['target_masks'][idx], data['ref_masks'][idx], data['refs'][idx], self.model)
        loss = refiner_loss(refined, data['targets'][idx])
        loss.backward()
        optimizer.step()
        return {'loss': loss.item()}

    def validate(self):
        """Challenge metric of refined outputs against the nearest-neighbour baseline (the raw reference)."""
        if self.val_data is None:
            logger.warning("No ranked val records; skipping refiner validation.")
            return {}
        data = self.val_data
        self.model.eval()
        try:
            with torch.no_grad():
                _, refined = refine(data['target_masks'], data['ref_masks'], data['refs'], self.model)
        finally:
            self.model.train()
        refined_scores, baseline_scores = [], []
        for out, ref, target in zip(refined, data['refs'], data['targets']):
            target8 = to_disk(target)
            refined_scores.append(challenge_metric(to_disk(out), target8))
            baseline_scores.append(challenge_metric(to_disk(ref), target8))
        refined_mean, baseline_mean = dataset_score(refined_scores), dataset_score(baseline_scores)
        return {
            'val_challenge_refined': refined_mean,
            'val_challenge_baseline': baseline_mean,
            'val_improvement': 1.0 - refined_mean / baseline_mean if baseline_mean > 0 else 0.0,
        }


def train_refiner(config, dataset_repo, checkpoint_repo, ranking_usecase, rankings, resume=None):
    trainer = RefinerTrainer(config, dataset_repo, checkpoint_repo, ranking_usecase, rankings)
    return trainer.run(resume=resume)
