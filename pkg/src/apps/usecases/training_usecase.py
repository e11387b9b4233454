"""
Shared training loop: seeding, batch sampling, checkpointing, resume, metrics logging.

Batch composition for step t is drawn from a generator seeded with (seed, t),
so a run resumed from a checkpoint at step t continues exactly like an
uninterrupted one.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch

from src.apps.core.seeding import derive_rng, seed_everything
from src.apps.networks.model_factory import build_model
from src.apps.repositories.metrics_repository import MetricsRepository
from src.apps.utils.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoint: str
    step: int
    validation: dict = field(default_factory=dict)


class BaseTrainer:
    kind = None

    def __init__(self, config, dataset_repo, checkpoint_repo):
        self.config = config
        self.dataset_repo = dataset_repo
        self.checkpoint_repo = checkpoint_repo
        self.index = dataset_repo.load_index()
        self.out_dir = Path(config.out_dir)
        metrics_path = config.metrics_log or self.out_dir / f"{self.kind}_metrics.jsonl"
        self.metrics = MetricsRepository(metrics_path)
        self.step = 0

        seed_everything(config.seed)
        self.model = build_model(self.kind, config.model)
        self.optimizers = self.make_optimizers()

    # -- hooks -------------------------------------------------------------
    def make_optimizers(self):
        return {'main': torch.optim.Adam(self.model.parameters(), lr=self.config.lr, betas=self.config.betas)}

    def prepare(self):
        """Loads everything the steps need. Called once before the loop."""
        raise NotImplementedError

    def train_step(self, step):
        """Runs one update and returns a dict of floats for the metrics log."""
        raise NotImplementedError

    def validate(self):
        return {}

    def initial_validation(self):
        return None

    # -- helpers -----------------------------------------------------------
    def step_rng(self, step):
        return derive_rng(self.config.seed, step)

    def batch_indices(self, rng, population):
        replace = population < self.config.batch_size
        return rng.choice(population, size=self.config.batch_size, replace=replace)

    def load_stack(self, relpaths, loader):
        items = [torch.as_tensor(loader(path)) for path in relpaths]
        stacked = torch.stack(items)
        expected = (self.config.resolution, self.config.resolution)
        if tuple(stacked.shape[-2:]) != expected:
            raise ShapeMismatchError(
                f"Dataset resolution {tuple(stacked.shape[-2:])} does not match configured {expected}"
            )
        return stacked

    def checkpoint_path(self, step=None):
        name = f"{self.kind}.ckpt" if step is None else f"{self.kind}_step{step}.ckpt"
        return self.out_dir / name

    def save(self, path):
        return self.checkpoint_repo.save(
            path, self.kind, self.model, self.optimizers, self.config.to_dict(), self.step,
        )

    def resume(self, path):
        checkpoint = self.checkpoint_repo.load(path, expected_kind=self.kind)
        self.checkpoint_repo.restore_model(checkpoint, self.model)
        for name, optimizer in self.optimizers.items():
            self.checkpoint_repo.restore_optimizer(checkpoint, name, optimizer, self.model)
        self.step = checkpoint.step
        logger.info(f"Resumed {self.kind} training from {path} at step {self.step}.")

    # -- loop --------------------------------------------------------------
    def run(self, resume=None):
        self.prepare()
        if resume:
            self.resume(resume)
            self.metrics.truncate_after(self.step)
        else:
            self.metrics.reset()
            initial = self.initial_validation()
            if initial:
                self.metrics.append({'step': 0, 'phase': 'val', **initial})

        self.model.train()
        while self.step < self.config.steps:
            self.step += 1
            record = self.train_step(self.step)
            self.metrics.append({'step': self.step, **record})
            if self.config.log_every and self.step % self.config.log_every == 0:
                summary = ', '.join(f"{k}={v:.4f}" for k, v in record.items() if isinstance(v, float))
                logger.info(f"[{self.kind}] step {self.step}/{self.config.steps}: {summary}")
            if self.config.checkpoint_every and self.step % self.config.checkpoint_every == 0:
                self.save(self.checkpoint_path(self.step))

        final = self.save(self.checkpoint_path())
        validation = self.validate()
        if validation:
            self.metrics.append({'step': self.step, 'phase': 'val', **validation})
            logger.info(f"[{self.kind}] validation: {validation}")
        return TrainResult(checkpoint=str(final), step=self.step, validation=validation)
