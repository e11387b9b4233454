"""
Normalization blocks: instance norm, AdaIN, SPADE, and their fusion.

The SPADE+Style Block feeds the same features through a SPADE branch (scale and
offset maps predicted from the segmentation mask) and an AdaIN branch (per-channel
scale and offset predicted from the style code) and averages the two.
"""
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import spectral_norm

from src.apps.config import DEFAULT_EPS, LEAKY_SLOPE, NUM_CLASSES
from src.apps.utils.exceptions import ShapeMismatchError


def maybe_spectral(module, enabled=True):
    """Wraps a conv/linear layer in spectral weight normalization (one power iteration per training forward)."""
    return spectral_norm(module) if enabled else module


def actvn(x):
    return F.leaky_relu(x, LEAKY_SLOPE)


def instance_norm(x, eps=DEFAULT_EPS):
    """(x - mean) / sqrt(var + eps) per sample and channel, population variance."""
    mean = x.mean(dim=(2, 3), keepdim=True)
    var = x.var(dim=(2, 3), keepdim=True, unbiased=False)
    return (x - mean) / torch.sqrt(var + eps)


def adain(x, style, weight, bias, eps=DEFAULT_EPS):
    """
    gamma(s) * instance_norm(x) + beta(s), where [gamma, beta] = weight @ s + bias
    and gamma takes the first C entries.
    """
    if style.dim() == 1:
        style = style.unsqueeze(0)
    channels = x.shape[1]
    if style.shape[-1] != weight.shape[1]:
        raise ShapeMismatchError(f"Style code has length {style.shape[-1]}, AdaIN expects {weight.shape[1]}")
    if weight.shape[0] != 2 * channels:
        raise ShapeMismatchError(f"AdaIN affine produces {weight.shape[0]} values for {channels} channels")
    params = F.linear(style, weight, bias)
    gamma, beta = params[:, :channels], params[:, channels:]
    return gamma[:, :, None, None] * instance_norm(x, eps) + beta[:, :, None, None]


def spade(x, mask_onehot, params, eps=DEFAULT_EPS):
    """
    gamma_map * instance_norm(x) + beta_map, with both maps predicted by convs
    over the mask resized (nearest) to the feature resolution.
    """
    if mask_onehot.dim() != 4:
        raise ShapeMismatchError(f"Expected a [N, C, H, W] one-hot mask, got {tuple(mask_onehot.shape)}")
    segmap = F.interpolate(mask_onehot.to(x.dtype), size=x.shape[2:], mode='nearest')
    if segmap.shape[2:] != x.shape[2:]:
        raise ShapeMismatchError(f"Mask resized to {tuple(segmap.shape[2:])} but features are {tuple(x.shape[2:])}")
    actv = params.mlp_shared(segmap)
    gamma = params.mlp_gamma(actv)
    beta = params.mlp_beta(actv)
    return gamma * instance_norm(x, eps) + beta


def spade_style_block(x, mask_onehot, style, params):
    """(SPADE(x) + AdaIN(x)) / 2."""
    spade_out = spade(x, mask_onehot, params.spade, params.eps)
    adain_out = adain(x, style, params.adain.affine.weight, params.adain.affine.bias, params.eps)
    return (spade_out + adain_out) / 2


class AdaIN(nn.Module):
    def __init__(self, channels, style_dim, eps=DEFAULT_EPS):
        super().__init__()
        self.channels = channels
        self.eps = eps
        self.affine = nn.Linear(style_dim, 2 * channels)
        # start as a plain instance norm: gamma = 1, beta = 0
        nn.init.zeros_(self.affine.bias)
        with torch.no_grad():
            self.affine.bias[:channels].fill_(1.0)

    def forward(self, x, style):
        return adain(x, style, self.affine.weight, self.affine.bias, self.eps)


class SPADE(nn.Module):
    def __init__(self, channels, num_classes=NUM_CLASSES, hidden=32, eps=DEFAULT_EPS):
        super().__init__()
        self.eps = eps
        self.mlp_shared = nn.Sequential(
            nn.Conv2d(num_classes, hidden, kernel_size=3, padding=1),
            nn.ReLU(),
        )
        self.mlp_gamma = nn.Conv2d(hidden, channels, kernel_size=3, padding=1)
        self.mlp_beta = nn.Conv2d(hidden, channels, kernel_size=3, padding=1)

    def forward(self, x, mask_onehot):
        return spade(x, mask_onehot, self, self.eps)


class SpadeStyleBlock(nn.Module):
    """
    With `style_injection=False` the block degrades to plain SPADE and ignores the style code.
    """
    def __init__(self, channels, num_classes=NUM_CLASSES, style_dim=64, hidden=32,
                 eps=DEFAULT_EPS, style_injection=True):
        super().__init__()
        self.eps = eps
        self.style_injection = style_injection
        self.spade = SPADE(channels, num_classes, hidden, eps)
        self.adain = AdaIN(channels, style_dim, eps)

    def forward(self, x, mask_onehot, style):
        if not self.style_injection:
            return self.spade(x, mask_onehot)
        return spade_style_block(x, mask_onehot, style, self)


class SpadeStyleResBlock(nn.Module):
    """
    Two {SPADE+Style Block -> leaky ReLU -> 3x3 conv} units plus a shortcut. The
    shortcut is the identity when channel counts match, otherwise
    SPADE+Style Block -> 1x1 conv.
    """
    def __init__(self, fin, fout, num_classes=NUM_CLASSES, style_dim=64, hidden=32,
                 spectral=True, style_injection=True, eps=DEFAULT_EPS):
        super().__init__()
        self.fin = fin
        self.fout = fout
        self.learned_shortcut = fin != fout
        fmiddle = min(fin, fout)

        self.conv_0 = maybe_spectral(nn.Conv2d(fin, fmiddle, kernel_size=3, padding=1), spectral)
        self.conv_1 = maybe_spectral(nn.Conv2d(fmiddle, fout, kernel_size=3, padding=1), spectral)
        block_args = dict(num_classes=num_classes, style_dim=style_dim, hidden=hidden,
                          eps=eps, style_injection=style_injection)
        self.norm_0 = SpadeStyleBlock(fin, **block_args)
        self.norm_1 = SpadeStyleBlock(fmiddle, **block_args)
        if self.learned_shortcut:
            self.conv_s = maybe_spectral(nn.Conv2d(fin, fout, kernel_size=1, bias=False), spectral)
            self.norm_s = SpadeStyleBlock(fin, **block_args)

    def shortcut(self, x, mask_onehot, style):
        if self.learned_shortcut:
            return self.conv_s(self.norm_s(x, mask_onehot, style))
        return x

    def forward(self, x, mask_onehot, style):
        if x.shape[1] != self.fin:
            raise ShapeMismatchError(f"ResBlock expects {self.fin} input channels, got {x.shape[1]}")
        x_s = self.shortcut(x, mask_onehot, style)
        dx = self.conv_0(actvn(self.norm_0(x, mask_onehot, style)))
        dx = self.conv_1(actvn(self.norm_1(dx, mask_onehot, style)))
        return x_s + dx
