"""
Mask and image conventions shared by every module.

A segmentation mask is an integer tensor of shape [H, W] (or a batch [N, H, W])
with values 0=background, 1=sclera, 2=iris, 3=pupil. Images are float tensors
in [-1, 1] internally and 8-bit unsigned arrays on disk.
"""
import numpy as np
import torch
import torch.nn.functional as F

from src.apps.config import NUM_CLASSES
from src.apps.utils.exceptions import OutOfRangeError, ShapeMismatchError


def as_mask_tensor(mask):
    """Accepts a numpy array or tensor and returns an int64 tensor."""
    if isinstance(mask, torch.Tensor):
        return mask.long()
    return torch.from_numpy(np.asarray(mask).astype(np.int64))


def validate_mask(mask, num_levels=0, num_classes=NUM_CLASSES):
    """
    Checks the SegMask invariants: values in range, H and W >= 8 and divisible by 2**num_levels.
    """
    mask = as_mask_tensor(mask)
    height, width = mask.shape[-2:]
    if height < 8 or width < 8:
        raise ShapeMismatchError(f"Mask must be at least 8x8, got {height}x{width}")
    step = 2 ** num_levels
    if height % step or width % step:
        raise ShapeMismatchError(f"Mask size {height}x{width} is not divisible by {step}")
    if mask.numel() and (mask.min() < 0 or mask.max() >= num_classes):
        raise OutOfRangeError(f"Mask values must lie in [0, {num_classes - 1}]")
    return mask


def one_hot(mask, num_classes=NUM_CLASSES, dtype=torch.float32):
    """
    [H, W] -> [1, C, H, W] and [N, H, W] -> [N, C, H, W]; exactly one channel is 1 per pixel.
    """
    mask = as_mask_tensor(mask)
    if mask.dim() == 2:
        mask = mask.unsqueeze(0)
    if mask.dim() != 3:
        raise ShapeMismatchError(f"Expected a [H, W] or [N, H, W] mask, got shape {tuple(mask.shape)}")
    if mask.numel() and (mask.min() < 0 or mask.max() >= num_classes):
        raise OutOfRangeError(f"Mask value {int(mask.max())} out of range for {num_classes} classes")
    encoded = F.one_hot(mask, num_classes)  # [N, H, W, C]
    return encoded.permute(0, 3, 1, 2).contiguous().to(dtype)


def downsample_mask(mask, factor):
    """
    Nearest-neighbour downsampling that keeps the top-left pixel of every factor x factor cell.
    """
    if factor < 1:
        raise OutOfRangeError(f"Downsampling factor must be >= 1, got {factor}")
    mask = as_mask_tensor(mask)
    height, width = mask.shape[-2:]
    if height % factor or width % factor:
        raise ShapeMismatchError(f"Mask size {height}x{width} is not divisible by factor {factor}")
    return mask[..., ::factor, ::factor].contiguous()


def to_internal(img8):
    """0..255 -> [-1, 1] as float32."""
    arr = torch.as_tensor(np.asarray(img8), dtype=torch.float64)
    return (arr * (2.0 / 255.0) - 1.0).to(torch.float32)


def to_disk(img):
    """[-1, 1] -> uint8 numpy array, rounding half up and clamping."""
    if isinstance(img, torch.Tensor):
        img = img.detach().cpu().double().numpy()
    values = (np.asarray(img, dtype=np.float64) + 1.0) * 127.5
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)
