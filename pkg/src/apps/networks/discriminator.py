import torch
import torch.nn as nn
import torch.nn.functional as F

from src.apps.config import LEAKY_SLOPE, NUM_CLASSES
from src.apps.core.tensor_ops import one_hot
from src.apps.networks.blocks import maybe_spectral
from src.apps.utils.exceptions import ShapeMismatchError

KERNEL = 4
PADDING = 2


class PatchDiscriminator(nn.Module):
    """
    Stack of stride-2 4x4 convs (spectral + instance norm after the first) and a
    stride-1 logit head. Returns the logit map and every layer's output.
    """
    def __init__(self, in_channels, n_layers=4, base_width=32, spectral=True):
        super().__init__()
        layers = []
        prev, width = in_channels, base_width
        for index in range(n_layers):
            conv = nn.Conv2d(prev, width, kernel_size=KERNEL, stride=2, padding=PADDING)
            if index == 0:
                layers.append(nn.Sequential(conv, nn.LeakyReLU(LEAKY_SLOPE)))
            else:
                layers.append(nn.Sequential(
                    maybe_spectral(conv, spectral),
                    nn.InstanceNorm2d(width, affine=False),
                    nn.LeakyReLU(LEAKY_SLOPE),
                ))
            prev, width = width, min(width * 2, 512)
        self.layers = nn.ModuleList(layers)
        self.head = nn.Conv2d(prev, 1, kernel_size=KERNEL, stride=1, padding=PADDING)

    def forward(self, x):
        feats = []
        for layer in self.layers:
            x = layer(x)
            feats.append(x)
        return self.head(x), feats


class MultiscaleDiscriminator(nn.Module):
    """
    One patch discriminator per scale; each coarser scale sees the input average-pooled by 2.
    Input is the one-hot mask concatenated with the image.
    """
    def __init__(self, num_classes=NUM_CLASSES, num_scales=2, n_layers=4, base_width=32, spectral=True):
        super().__init__()
        if n_layers < 2:
            raise ValueError("Discriminator needs at least 2 layers for feature matching")
        self.num_classes = num_classes
        self.scales = nn.ModuleList(
            PatchDiscriminator(num_classes + 1, n_layers, base_width, spectral) for _ in range(num_scales)
        )

    def forward(self, mask_onehot, img):
        if img.dim() == 3:
            img = img.unsqueeze(1)
        if mask_onehot.shape[2:] != img.shape[2:] or mask_onehot.shape[0] != img.shape[0]:
            raise ShapeMismatchError(
                f"Mask {tuple(mask_onehot.shape)} and image {tuple(img.shape)} do not match"
            )
        x = torch.cat([mask_onehot.to(img.dtype), img], dim=1)
        results = []
        for scale in self.scales:
            results.append(scale(x))
            x = F.avg_pool2d(x, kernel_size=3, stride=2, padding=1, count_include_pad=False)
        return results


def discriminate(mask, img, discriminator):
    """
    SegMask [H, W] + image [H, W] -> list over scales of (logit map, feature list).
    """
    if tuple(mask.shape[-2:]) != tuple(img.shape[-2:]):
        raise ShapeMismatchError(f"Mask {tuple(mask.shape)} and image {tuple(img.shape)} differ in size")
    if img.dim() == 2:
        img = img[None, None]
    elif img.dim() == 3:
        img = img.unsqueeze(1)
    mask_onehot = one_hot(mask, discriminator.num_classes, dtype=img.dtype)
    return discriminator(mask_onehot, img)
