import torch
import torch.nn as nn

from src.apps.config import DEFAULT_RESOLUTION, DEFAULT_STYLE_DIM, LEAKY_SLOPE
from src.apps.networks.blocks import maybe_spectral
from src.apps.utils.exceptions import ShapeMismatchError


class StyleEncoder(nn.Module):
    """
    Stride-2 conv stages with spectral weight normalization and instance norm,
    then global average pooling and a linear map to the style code.
    Returns the code together with every stage's output (used by the Gram loss).
    """
    def __init__(self, resolution=DEFAULT_RESOLUTION, widths=(16, 32, 64, 128),
                 style_dim=DEFAULT_STYLE_DIM, in_channels=1, spectral=True):
        super().__init__()
        self.resolution = resolution
        self.style_dim = style_dim
        stages = []
        prev = in_channels
        for width in widths:
            stages.append(nn.Sequential(
                maybe_spectral(nn.Conv2d(prev, width, kernel_size=3, stride=2, padding=1), spectral),
                nn.InstanceNorm2d(width, affine=False),
                nn.LeakyReLU(LEAKY_SLOPE),
            ))
            prev = width
        self.stages = nn.ModuleList(stages)
        self.fc = nn.Linear(prev, style_dim)

    def forward(self, img):
        if img.dim() == 2:
            img = img[None, None]
        elif img.dim() == 3:
            img = img.unsqueeze(1)
        if tuple(img.shape[-2:]) != (self.resolution, self.resolution):
            raise ShapeMismatchError(
                f"Style encoder expects {self.resolution}x{self.resolution} images, got {tuple(img.shape[-2:])}"
            )
        feats = []
        x = img
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        return self.fc(x.mean(dim=(2, 3))), feats


def encode_style(img, encoder):
    """[H, W] image -> ([d_s] code, stage features). Batched input keeps its batch dim."""
    code, feats = encoder(img)
    if img.dim() == 2:
        code = code[0]
    return code, feats


def aggregate_styles(codes):
    """Element-wise maximum over a non-empty list of style codes."""
    if len(codes) == 0:
        raise ValueError("Cannot aggregate an empty list of style codes")
    codes = [torch.as_tensor(code) for code in codes]
    if len({tuple(code.shape) for code in codes}) != 1:
        raise ShapeMismatchError("Style codes differ in length")
    return torch.stack(codes, dim=0).amax(dim=0)
