import math

import numpy as np

from src.apps.utils.exceptions import ShapeMismatchError


def challenge_metric(fake8, real8):
    """
    (1 / HW) * sqrt(sum of squared pixel differences), on 8-bit values. Lower is better.
    """
    fake = np.asarray(fake8, dtype=np.float64)
    real = np.asarray(real8, dtype=np.float64)
    if fake.shape != real.shape or fake.ndim != 2:
        raise ShapeMismatchError(f"Challenge metric needs two equal 2-D images, got {fake.shape} and {real.shape}")
    height, width = fake.shape
    return float(np.sqrt(np.sum((fake - real) ** 2)) / (height * width))


def dataset_score(scores):
    """Mean of per-image challenge metrics; exact summation keeps it order-independent."""
    scores = list(scores)
    if not scores:
        raise ValueError("No scores to average")
    return math.fsum(scores) / len(scores)
