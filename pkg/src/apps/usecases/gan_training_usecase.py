"""
Adversarial stage: alternating discriminator and generator updates.

Every training pair (mask, image) draws k style images uniformly from the
top-ranked same-person pool, with replacement when the pool holds fewer than
k images. The style encoder is updated together with the generator.
"""
import logging

import torch

from src.apps.core.tensor_ops import one_hot
from src.apps.losses.adversarial import gan_loss_d, gan_loss_g
from src.apps.losses.consistency import (
    feature_matching_loss, generator_objective, gram_loss, l2_pixel_loss, mean_iou, style_code_loss,
)
from src.apps.networks.model_factory import parameter_digest
from src.apps.networks.style_encoder import aggregate_styles
from src.apps.networks.unet import segment
from src.apps.usecases.training_usecase import BaseTrainer
from src.apps.utils.exceptions import EmptySplitError, StepIsolationError

logger = logging.getLogger(__name__)

VAL_STYLE_TRIPLETS = 50


class GanTrainer(BaseTrainer):
    kind = 'gan'

    def __init__(self, config, dataset_repo, checkpoint_repo, rankings, segmenter=None):
        self.rankings = rankings
        self.segmenter = segmenter
        super().__init__(config, dataset_repo, checkpoint_repo)

    def make_optimizers(self):
        betas = self.config.betas_adversarial
        return {
            'g': torch.optim.Adam(self.model.generator_parameters(), lr=self.config.lr_g, betas=betas),
            'd': torch.optim.Adam(self.model.discriminator_parameters(), lr=self.config.lr_d, betas=betas),
        }

    # -- data ----------------------------------------------------------------
    def _style_pool(self, record):
        ranked = self.rankings.get(record.img)
        if not ranked:
            return []
        top = ranked.top(self.config.style_pool_top_n)
        return [entry.img for entry in top if entry.img != record.img]

    def _load_split(self, split):
        records, pools = [], []
        for _, record in self.index.labeled(split):
            pool = self._style_pool(record)
            if not pool:
                logger.warning(f"No style pool for {record.img}; skipping it.")
                continue
            records.append(record)
            pools.append([self._pool_slot(path) for path in pool])
        if not records:
            return None
        return {
            'persons': [self.index.person_of(r.img) for r in records],
            'masks': self.load_stack([r.mask for r in records], self.dataset_repo.load_mask).long(),
            'images': self.load_stack([r.img for r in records], self.dataset_repo.load_image),
            'pools': pools,
        }

    def _pool_slot(self, path):
        if path not in self._slots:
            self._slots[path] = len(self._slot_paths)
            self._slot_paths.append(path)
        return self._slots[path]

    def prepare(self):
        self._slots, self._slot_paths = {}, []
        self.train_data = self._load_split('train')
        if self.train_data is None:
            raise EmptySplitError("No labeled train record has a ranked style pool; cannot train the GAN")
        self.val_data = self._load_split('val')
        self.pool_images = self.load_stack(self._slot_paths, self.dataset_repo.load_image)
        logger.info(
            f"GAN data: {len(self.train_data['images'])} training pairs, {len(self._slot_paths)} style images."
        )

    # -- steps ---------------------------------------------------------------
    def sample_batch(self, step):
        """Batch indices and the [N * k] style images for training step `step`."""
        rng = self.step_rng(step)
        idx = self.batch_indices(rng, len(self.train_data['images']))
        k = self.config.k_style_images
        chosen = []
        for i in idx:
            pool = self.train_data['pools'][i]
            picks = rng.choice(len(pool), size=k, replace=len(pool) < k)
            chosen.extend(pool[j] for j in picks)
        return torch.as_tensor(idx), self.pool_images[torch.as_tensor(chosen)]

    def style_codes(self, style_images, batch_size):
        codes, _ = self.model.style_encoder(style_images)
        per_slot = codes.view(batch_size, self.config.k_style_images, -1).unbind(dim=1)
        return aggregate_styles(list(per_slot))

    def discriminator_loss(self, mask_onehot, real, style_images):
        with torch.no_grad():
            style = self.style_codes(style_images, len(real))
            fake = self.model.generator(mask_onehot, style)[:, 0]
        real_out = self.model.discriminator(mask_onehot, real)
        fake_out = self.model.discriminator(mask_onehot, fake)
        return gan_loss_d([logits for logits, _ in real_out], [logits for logits, _ in fake_out])

    def generator_report(self, mask_onehot, real, style_images):
        """Full weighted generator objective for one batch."""
        reduction = self.config.l1_reduction
        style = self.style_codes(style_images, len(real))
        fake = self.model.generator(mask_onehot, style)[:, 0]
        fake_out = self.model.discriminator(mask_onehot, fake)
        with torch.no_grad():
            real_out = self.model.discriminator(mask_onehot, real)
            _, real_feats = self.model.style_encoder(real)
        style_hat, fake_feats = self.model.style_encoder(fake)
        parts = {
            'gan': gan_loss_g([logits for logits, _ in fake_out]),
            'df': feature_matching_loss([f for _, f in fake_out], [f for _, f in real_out], reduction),
            'l2': l2_pixel_loss(fake, real),
            'style': style_code_loss(style, style_hat),
            'gram': gram_loss(fake_feats, real_feats, reduction),
        }
        return generator_objective(parts, self.config.loss_weights)

    def _digests(self):
        return (
            parameter_digest([self.model.generator, self.model.style_encoder]),
            parameter_digest(self.model.discriminator),
        )

    def train_step(self, step):
        idx, style_images = self.sample_batch(step)
        real = self.train_data['images'][idx]
        mask_onehot = one_hot(self.train_data['masks'][idx])
        check = self.config.verify_step_isolation

        before = self._digests() if check else None
        opt_d = self.optimizers['d']
        opt_d.zero_grad()
        loss_d = self.discriminator_loss(mask_onehot, real, style_images)
        loss_d.backward()
        opt_d.step()
        if check:
            after = self._digests()
            if after[0] != before[0]:
                raise StepIsolationError(f"Discriminator step {step} changed generator parameters")
            before = after

        opt_g = self.optimizers['g']
        opt_g.zero_grad()
        report = self.generator_report(mask_onehot, real, style_images)
        report.total.backward()
        opt_g.step()
        if check and self._digests()[1] != before[1]:
            raise StepIsolationError(f"Generator step {step} changed discriminator parameters")

        return report.as_record(d_loss=loss_d.item())

    # -- validation ----------------------------------------------------------
    def _val_styles(self, data):
        """
        Per val sample, its k best-ranked style images each encoded on their own.
        Returns the aggregated codes [N, d] and the per-sample code stacks [k, d].
        """
        k = self.config.k_style_images
        styles, code_sets = [], []
        for pool in data['pools']:
            picks = [pool[j % len(pool)] for j in range(k)]
            codes = [self.model.style_encoder(self.pool_images[slot])[0][0] for slot in picks]
            styles.append(aggregate_styles(codes))
            code_sets.append(torch.stack(codes))
        return torch.stack(styles), code_sets

    def validate(self):
        """
        L2 of generated against real val images, plus a content check (segmenter IoU on
        generated images) and a style check (code of the generated image closer on average to
        its own style images' codes than to another person's, over VAL_STYLE_TRIPLETS triplets).
        """
        data = self.val_data
        if data is None:
            logger.warning("No val records with style pools; skipping GAN validation.")
            return {}
        self.model.eval()
        try:
            with torch.no_grad():
                styles, code_sets = self._val_styles(data)
                fake = self.model.generator(one_hot(data['masks']), styles)[:, 0]
                result = {'val_l2': float(l2_pixel_loss(fake, data['images']))}
                if self.segmenter is not None:
                    preds = segment(fake, self.segmenter).argmax(dim=1)
                    ious = [mean_iou(p, t) for p, t in zip(preds, data['masks'])]
                    result['val_content_iou'] = sum(ious) / len(ious)
                accuracy = style_triplet_accuracy(self.model.style_encoder(fake)[0], code_sets, data['persons'])
                if accuracy is not None:
                    result['val_style_triplet_accuracy'] = accuracy
        finally:
            self.model.train()
        return result

    def initial_validation(self):
        return self.validate()


def style_triplet_accuracy(generated_codes, style_code_sets, persons, triplets=VAL_STYLE_TRIPLETS):
    """
    Triplets (generated sample i, its own style codes, style codes of a sample j of
    another person), cycling over every i that has such a j and over its partners in
    index order. A triplet counts as correct when the mean distance from the generated
    code to its own style codes is below the mean distance to sample j's.
    Returns the correct fraction, or None if only one person is present.
    """
    anchors = [i for i, person in enumerate(persons) if any(p != person for p in persons)]
    if not anchors:
        return None
    hits = 0
    for t in range(triplets):
        i = anchors[t % len(anchors)]
        others = [j for j, p in enumerate(persons) if p != persons[i]]
        j = others[(t // len(anchors)) % len(others)]
        own = torch.linalg.vector_norm(style_code_sets[i] - generated_codes[i], dim=1).mean()
        other = torch.linalg.vector_norm(style_code_sets[j] - generated_codes[i], dim=1).mean()
        hits += int(own < other)
    return hits / triplets


def train_gan(config, dataset_repo, checkpoint_repo, rankings, segmenter=None, resume=None):
    return GanTrainer(config, dataset_repo, checkpoint_repo, rankings, segmenter).run(resume=resume)
