import torch
import torch.nn as nn
import torch.nn.functional as F

from src.apps.config import DEFAULT_RESOLUTION, DEFAULT_STYLE_DIM, NUM_CLASSES
from src.apps.core.tensor_ops import one_hot, validate_mask
from src.apps.networks.blocks import SpadeStyleResBlock, actvn
from src.apps.utils.exceptions import ShapeMismatchError

# float32 tanh rounds to exactly 1 for large inputs; outputs stay strictly inside (-1, 1)
OUTPUT_BOUND = 1.0 - 1e-6


class SSSGenerator(nn.Module):
    """
    Starts from a linear map of the one-hot mask downsampled to seed_size x seed_size,
    then doubles the resolution after each SPADE+Style ResBlock. Output is a tanh image
    clamped to [-OUTPUT_BOUND, OUTPUT_BOUND].
    """
    def __init__(self, num_classes=NUM_CLASSES, resolution=DEFAULT_RESOLUTION,
                 widths=(256, 128, 64, 32), style_dim=DEFAULT_STYLE_DIM, spade_hidden=32,
                 spectral=True, style_injection=True):
        super().__init__()
        self.num_classes = num_classes
        self.resolution = resolution
        self.style_dim = style_dim
        self.widths = tuple(widths)
        self.num_levels = len(self.widths)
        self.factor = 2 ** self.num_levels
        if resolution % self.factor:
            raise ShapeMismatchError(f"Resolution {resolution} is not divisible by {self.factor}")
        self.seed_size = resolution // self.factor

        self.fc = nn.Linear(num_classes * self.seed_size ** 2, self.widths[0] * self.seed_size ** 2)
        blocks = []
        for level, fout in enumerate(self.widths):
            fin = self.widths[max(level - 1, 0)]
            blocks.append(SpadeStyleResBlock(
                fin, fout, num_classes=num_classes, style_dim=style_dim, hidden=spade_hidden,
                spectral=spectral, style_injection=style_injection,
            ))
        self.blocks = nn.ModuleList(blocks)
        self.conv_img = nn.Conv2d(self.widths[-1], 1, kernel_size=3, padding=1)

    def forward(self, mask_onehot, style):
        n, c, h, w = mask_onehot.shape
        if c != self.num_classes or (h, w) != (self.resolution, self.resolution):
            raise ShapeMismatchError(
                f"Generator expects [N, {self.num_classes}, {self.resolution}, {self.resolution}] masks, "
                f"got {tuple(mask_onehot.shape)}"
            )
        if style.dim() == 1:
            style = style.unsqueeze(0)
        if style.shape[-1] != self.style_dim:
            raise ShapeMismatchError(f"Style code has length {style.shape[-1]}, generator expects {self.style_dim}")

        seed = mask_onehot[:, :, ::self.factor, ::self.factor]
        x = self.fc(seed.flatten(1)).view(n, self.widths[0], self.seed_size, self.seed_size)
        for block in self.blocks:
            x = block(x, mask_onehot, style)
            x = F.interpolate(x, scale_factor=2, mode='nearest')
        return torch.tanh(self.conv_img(actvn(x))).clamp(-OUTPUT_BOUND, OUTPUT_BOUND)


def generate(mask, style, generator):
    """
    SegMask [H, W] (or [N, H, W]) and style code(s) -> image(s) of the same spatial size.
    """
    mask = validate_mask(mask, num_levels=generator.num_levels, num_classes=generator.num_classes)
    weight = generator.fc.weight
    mask_onehot = one_hot(mask, generator.num_classes, dtype=weight.dtype).to(weight.device)
    out = generator(mask_onehot, style.to(weight.dtype))[:, 0]
    return out[0] if mask.dim() == 2 else out
