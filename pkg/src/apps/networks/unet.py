"""
Compact U-shaped encoder-decoder shared by the segmenter and the refiner.
"""
import torch
import torch.nn as nn
import torch.nn.functional as F

from src.apps.config import NUM_CLASSES
from src.apps.core.tensor_ops import one_hot
from src.apps.utils.exceptions import ShapeMismatchError

REFINER_IN_CHANNELS = 2 * NUM_CLASSES + 1


class DoubleConv(nn.Sequential):
    def __init__(self, in_channels, out_channels):
        super().__init__(
            nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )


class UNet(nn.Module):
    """
    len(widths) - 1 max-pool stages down, as many nearest-upsampling stages up, with skips.
    `zero_init_head` zeroes the output conv so the initial prediction is exactly 0.
    """
    def __init__(self, in_channels, out_channels, widths=(16, 32, 64, 128), zero_init_head=False):
        super().__init__()
        widths = tuple(widths)
        self.in_channels = in_channels
        self.depth = len(widths) - 1
        self.inc = DoubleConv(in_channels, widths[0])
        self.downs = nn.ModuleList(DoubleConv(widths[i], widths[i + 1]) for i in range(self.depth))
        self.ups = nn.ModuleList(
            DoubleConv(widths[i + 1] + widths[i], widths[i]) for i in reversed(range(self.depth))
        )
        self.head = nn.Conv2d(widths[0], out_channels, kernel_size=1)
        if zero_init_head:
            nn.init.zeros_(self.head.weight)
            nn.init.zeros_(self.head.bias)

    def forward(self, x):
        step = 2 ** self.depth
        if x.shape[1] != self.in_channels or x.shape[2] % step or x.shape[3] % step:
            raise ShapeMismatchError(
                f"UNet expects {self.in_channels} channels and sizes divisible by {step}, got {tuple(x.shape)}"
            )
        skips = [self.inc(x)]
        for down in self.downs:
            skips.append(down(F.max_pool2d(skips[-1], 2)))
        x = skips.pop()
        for up in self.ups:
            skip = skips.pop()
            x = F.interpolate(x, size=skip.shape[2:], mode='nearest')
            x = up(torch.cat([x, skip], dim=1))
        return self.head(x)


def build_segmenter(widths=(16, 32, 64, 128)):
    return UNet(1, NUM_CLASSES, widths)


def build_refiner(widths=(16, 32, 64, 128), zero_init_head=True):
    return UNet(REFINER_IN_CHANNELS, 1, widths, zero_init_head=zero_init_head)


def _as_batch(img):
    if img.dim() == 2:
        return img[None, None]
    if img.dim() == 3:
        return img.unsqueeze(1)
    return img


def segment(img, segmenter):
    """Image [H, W] -> class logits [4, H, W]; batched [N, H, W] -> [N, 4, H, W]."""
    logits = segmenter(_as_batch(img))
    return logits[0] if img.dim() == 2 else logits


def refiner_input(target_mask, ref_mask, ref_img):
    """Concatenation of one-hot target mask, one-hot reference pseudo-label and reference image."""
    if not (tuple(target_mask.shape[-2:]) == tuple(ref_mask.shape[-2:]) == tuple(ref_img.shape[-2:])):
        raise ShapeMismatchError(
            f"Refiner inputs differ in size: {tuple(target_mask.shape)}, {tuple(ref_mask.shape)}, {tuple(ref_img.shape)}"
        )
    img = _as_batch(ref_img)
    return torch.cat([
        one_hot(target_mask, dtype=img.dtype),
        one_hot(ref_mask, dtype=img.dtype),
        img,
    ], dim=1)


def refine(target_mask, ref_mask, ref_img, refiner):
    """
    Returns (residual, refined) with refined = clamp(ref_img + residual, -1, 1).
    """
    residual = refiner(refiner_input(target_mask, ref_mask, ref_img))[:, 0]
    if ref_img.dim() == 2:
        residual = residual[0]
    refined = torch.clamp(ref_img + residual, -1.0, 1.0)
    return residual, refined
