import logging

import torch

from src.apps.losses.consistency import mean_iou, segmenter_loss
from src.apps.networks.unet import segment
from src.apps.usecases.training_usecase import BaseTrainer
from src.apps.utils.exceptions import EmptySplitError

logger = logging.getLogger(__name__)


class SegmenterTrainer(BaseTrainer):
    """
    Pixel-wise cross-entropy on the labeled training split; reports mean IoU on the labeled val split.
    """
    kind = 'segmenter'

    def prepare(self):
        train = self.index.labeled('train')
        if not train:
            raise EmptySplitError("The labeled train split is empty; nothing to train the segmenter on")
        self.images = self.load_stack([r.img for _, r in train], self.dataset_repo.load_image)
        self.masks = self.load_stack([r.mask for _, r in train], self.dataset_repo.load_mask).long()

        val = self.index.labeled('val')
        self.val_images = self.load_stack([r.img for _, r in val], self.dataset_repo.load_image) if val else None
        self.val_masks = self.load_stack([r.mask for _, r in val], self.dataset_repo.load_mask).long() if val else None
        logger.info(f"Segmenter data: {len(train)} train, {len(val)} val labeled images.")

    def train_step(self, step):
        idx = torch.as_tensor(self.batch_indices(self.step_rng(step), len(self.images)))
        optimizer = self.optimizers['main']
        optimizer.zero_grad()
        loss = segmenter_loss(segment(self.images[idx], self.model), self.masks[idx])
        loss.backward()
        optimizer.step()
        return {'loss': loss.item()}

    def validate(self):
        if self.val_images is None:
            logger.warning("No labeled val images; skipping segmenter validation.")
            return {}
        self.model.eval()
        try:
            with torch.no_grad():
                preds = segment(self.val_images, self.model).argmax(dim=1)
        finally:
            self.model.train()
        ious = [mean_iou(p, t) for p, t in zip(preds, self.val_masks)]
        return {'val_mean_iou': sum(ious) / len(ious)}


def train_segmenter(config, dataset_repo, checkpoint_repo, resume=None):
    return SegmenterTrainer(config, dataset_repo, checkpoint_repo).run(resume=resume)
