import random
import logging

import numpy as np
import torch

logger = logging.getLogger(__name__)


def seed_everything(seed, deterministic=True):
    """
    Seeds python, numpy and torch. With `deterministic`, torch is asked for
    deterministic kernels and a single intra-op thread so runs are bit-stable.
    """
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.set_num_threads(1)
    logger.debug(f"Seeded all generators with {seed} (deterministic={deterministic}).")


def derive_rng(*keys):
    """
    Independent numpy generator for a tuple of non-negative integer keys,
    e.g. (dataset_seed, person_id, image_index) or (train_seed, step).
    """
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def derive_seed(*keys):
    """A 32-bit integer seed derived from the same keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])
