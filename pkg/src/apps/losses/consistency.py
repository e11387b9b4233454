"""
Consistency terms of the generator objective plus the segmenter and refiner losses.

Feature-matching and Gram terms skip the first feature map of each list and
treat the real-image side as a constant.
"""
import torch
import torch.nn.functional as F

from src.apps.config import NUM_CLASSES
from src.apps.core.tensor_ops import as_mask_tensor
from src.apps.models.loss_model import TERMS, LossReport
from src.apps.utils.exceptions import OutOfRangeError, ShapeMismatchError

REDUCTIONS = ('mean', 'sum')


def _check_same_shape(a, b, what):
    if tuple(a.shape) != tuple(b.shape):
        raise ShapeMismatchError(f"{what}: shapes {tuple(a.shape)} and {tuple(b.shape)} differ")


def _l1(a, b, reduction):
    if reduction not in REDUCTIONS:
        raise ValueError(f"Unknown L1 reduction '{reduction}'")
    diff = (a - b).abs()
    return diff.mean() if reduction == 'mean' else diff.sum()


def feature_matching_loss(fake_feats, real_feats, reduction='mean'):
    """
    Sum over scales, and over layers 2..m within each scale, of the L1 distance
    between generated and real discriminator features.
    """
    if len(fake_feats) != len(real_feats):
        raise ShapeMismatchError(f"Got {len(fake_feats)} fake and {len(real_feats)} real scales")
    total = None
    for fake_scale, real_scale in zip(fake_feats, real_feats):
        if len(fake_scale) != len(real_scale):
            raise ShapeMismatchError(f"Got {len(fake_scale)} fake and {len(real_scale)} real layers")
        for fake, real in zip(fake_scale[1:], real_scale[1:]):
            _check_same_shape(fake, real, "Feature matching")
            term = _l1(fake, real.detach(), reduction)
            total = term if total is None else total + term
    if total is None:
        return torch.zeros(())
    return total


def l2_pixel_loss(fake, real):
    """Mean squared error."""
    _check_same_shape(fake, real, "L2 pixel loss")
    return F.mse_loss(fake, real)


def style_code_loss(s, s_hat):
    """
    Euclidean distance between the (constant) aggregated code and the generated
    image's code. Batched codes [N, d_s] give the batch mean of per-sample distances.
    """
    _check_same_shape(s, s_hat, "Style code loss")
    return torch.linalg.vector_norm(s.detach() - s_hat, dim=-1).mean()


def gram_matrix(feats):
    """[C, H, W] -> [C, C] (or batched [N, C, H, W] -> [N, C, C]) normalized by C*H*W."""
    batched = feats.dim() == 4
    if not batched:
        feats = feats.unsqueeze(0)
    n, c, h, w = feats.shape
    flat = feats.reshape(n, c, h * w)
    gram = torch.bmm(flat, flat.transpose(1, 2)) / (c * h * w)
    return gram if batched else gram[0]


def gram_loss(fake_feats, real_feats, reduction='mean'):
    """Sum over encoder stages 2..m of the entry-wise L1 between Gram matrices."""
    if len(fake_feats) != len(real_feats):
        raise ShapeMismatchError(f"Got {len(fake_feats)} fake and {len(real_feats)} real encoder stages")
    total = None
    for fake, real in zip(fake_feats[1:], real_feats[1:]):
        _check_same_shape(fake, real, "Gram loss")
        term = _l1(gram_matrix(fake), gram_matrix(real.detach()), reduction)
        total = term if total is None else total + term
    if total is None:
        return torch.zeros(())
    return total


def generator_objective(parts, weights):
    """
    Weighted sum of the five generator terms. `parts` maps each of
    gan, df, l2, style, gram to its unweighted value.
    """
    missing = [name for name in TERMS if name not in parts]
    if missing:
        raise ValueError(f"Generator objective is missing term(s): {', '.join(missing)}")
    weight_map = weights.to_dict()
    total = 0.0
    for name in TERMS:
        total = total + weight_map[name] * parts[name]
    return LossReport(terms={name: parts[name] for name in TERMS}, weights=weight_map, total=total)


def segmenter_loss(logits, mask):
    """Pixel-averaged cross-entropy."""
    mask = as_mask_tensor(mask).to(logits.device)
    if logits.dim() == 3:
        logits = logits.unsqueeze(0)
    if mask.dim() == 2:
        mask = mask.unsqueeze(0)
    num_classes = logits.shape[1]
    if mask.numel() and (mask.min() < 0 or mask.max() >= num_classes):
        raise OutOfRangeError(f"Mask class {int(mask.max())} out of range for {num_classes} classes")
    if logits.shape[2:] != mask.shape[1:] or logits.shape[0] != mask.shape[0]:
        raise ShapeMismatchError(f"Logits {tuple(logits.shape)} and mask {tuple(mask.shape)} do not align")
    return F.cross_entropy(logits, mask)


def refiner_loss(refined, target):
    return l2_pixel_loss(refined, target)


def mean_iou(pred, target, num_classes=NUM_CLASSES):
    """
    Mean over classes of intersection / union, skipping classes absent from both masks.
    """
    pred, target = as_mask_tensor(pred), as_mask_tensor(target)
    _check_same_shape(pred, target, "Mean IoU")
    ious = []
    for cls in range(num_classes):
        p, t = pred == cls, target == cls
        union = (p | t).sum().item()
        if union == 0:
            continue
        ious.append((p & t).sum().item() / union)
    return sum(ious) / len(ious) if ious else 1.0
