import pytest
import torch
from torch.autograd import gradcheck

from src.apps.core.tensor_ops import one_hot
from src.apps.networks.blocks import (
    SPADE, AdaIN, SpadeStyleBlock, SpadeStyleResBlock, adain, instance_norm, spade, spade_style_block,
)
from src.apps.utils.exceptions import ShapeMismatchError


def _random_mask(generator, size=16):
    return torch.randint(0, 4, (1, size, size), generator=generator)


def _zero_(module):
    with torch.no_grad():
        for param in module.parameters():
            param.zero_()


def test_instance_norm_hand_computed():
    x = torch.tensor([1.0, 2.0, 3.0, 4.0], dtype=torch.float64).view(1, 1, 2, 2)
    out = instance_norm(x, eps=1e-12).flatten()
    assert torch.allclose(out, torch.tensor([-1.3416, -0.4472, 0.4472, 1.3416], dtype=torch.float64), atol=1e-4)


def test_instance_norm_constant_channel_is_zero_and_random_input_is_centred():
    assert torch.all(instance_norm(torch.full((1, 2, 4, 4), 3.0)) == 0)
    out = instance_norm(torch.randn(2, 3, 8, 8, generator=torch.Generator().manual_seed(0)))
    assert out.mean(dim=(2, 3)).abs().max() < 1e-6


def test_adain_scale_two_offset_one():
    x = torch.tensor([1.0, 2.0, 3.0, 4.0], dtype=torch.float64).view(1, 1, 2, 2)
    weight = torch.zeros(2, 3, dtype=torch.float64)
    bias = torch.tensor([2.0, 1.0], dtype=torch.float64)
    out = adain(x, torch.zeros(3, dtype=torch.float64), weight, bias, eps=1e-12).flatten()
    assert torch.allclose(out, torch.tensor([-1.6833, 0.1056, 1.8944, 3.6833], dtype=torch.float64), atol=1e-4)


def test_adain_initialized_as_identity_modulation():
    module = AdaIN(channels=3, style_dim=5)
    with torch.no_grad():
        module.affine.weight.zero_()
    x = torch.randn(1, 3, 6, 6)
    assert torch.allclose(module(x, torch.randn(5)), instance_norm(x))


def test_adain_moment_identity():
    g = torch.Generator().manual_seed(1)
    x = torch.randn(2, 4, 16, 16, generator=g, dtype=torch.float64) * 3 + 1
    style = torch.randn(2, 6, generator=g, dtype=torch.float64)
    weight = torch.randn(8, 6, generator=g, dtype=torch.float64)
    bias = torch.randn(8, generator=g, dtype=torch.float64)
    out = adain(x, style, weight, bias)
    params = style @ weight.T + bias
    gamma, beta = params[:, :4], params[:, 4:]
    assert (out.mean(dim=(2, 3)) - beta).abs().max() < 1e-4
    assert (out.std(dim=(2, 3), unbiased=False) - gamma.abs()).abs().max() < 1e-4


def test_adain_rejects_wrong_style_length():
    with pytest.raises(ShapeMismatchError):
        adain(torch.randn(1, 2, 4, 4), torch.randn(3), torch.randn(4, 5), torch.randn(4))


def test_spade_zero_parameters_annihilate():
    module = SPADE(channels=8, hidden=4)
    _zero_(module)
    x = torch.randn(1, 8, 16, 16)
    out = module(x, one_hot(_random_mask(torch.Generator().manual_seed(2))))
    assert out.shape == x.shape
    assert torch.all(out == 0)


def test_spade_is_local():
    g = torch.Generator().manual_seed(3)
    module = SPADE(channels=4, hidden=8)
    x = torch.randn(1, 4, 32, 32, generator=g)
    mask = _random_mask(g, 32)
    edited = mask.clone()
    edited[0, 16, 16] = (mask[0, 16, 16] + 1) % 4
    with torch.no_grad():
        before = module(x, one_hot(mask))
        after = module(x, one_hot(edited))
    changed = (before != after).any(dim=1)[0]
    outside = torch.ones_like(changed)
    outside[16 - 2:16 + 3, 16 - 2:16 + 3] = False
    assert changed.any()
    assert not changed[outside].any()


def test_spade_resizes_mask_to_feature_resolution():
    module = SPADE(channels=3, hidden=4)
    out = module(torch.randn(1, 3, 8, 8), one_hot(_random_mask(torch.Generator().manual_seed(4), 32)))
    assert out.shape == (1, 3, 8, 8)


def test_block_equals_mean_of_branches():
    g = torch.Generator().manual_seed(5)
    block = SpadeStyleBlock(channels=6, style_dim=4, hidden=8)
    x = torch.randn(2, 6, 8, 8, generator=g)
    mask = one_hot(torch.randint(0, 4, (2, 8, 8), generator=g))
    style = torch.randn(2, 4, generator=g)
    with torch.no_grad():
        out = spade_style_block(x, mask, style, block)
        spade_out = spade(x, mask, block.spade)
        adain_out = adain(x, style, block.adain.affine.weight, block.adain.affine.bias)
    assert (out - (spade_out + adain_out) / 2).abs().max() < 1e-6
    low, high = torch.minimum(spade_out, adain_out), torch.maximum(spade_out, adain_out)
    assert torch.all(out >= low - 1e-6) and torch.all(out <= high + 1e-6)


def test_block_with_zero_parameters_is_zero():
    block = SpadeStyleBlock(channels=3, style_dim=4, hidden=4)
    _zero_(block)
    out = block(torch.randn(1, 3, 8, 8), one_hot(torch.zeros(1, 8, 8, dtype=torch.long)), torch.randn(4))
    assert torch.all(out == 0)


def test_block_without_style_injection_ignores_style():
    block = SpadeStyleBlock(channels=3, style_dim=4, hidden=4, style_injection=False)
    x = torch.randn(1, 3, 8, 8)
    mask = one_hot(torch.zeros(1, 8, 8, dtype=torch.long))
    with torch.no_grad():
        assert torch.equal(block(x, mask, torch.randn(4)), block(x, mask, torch.randn(4)))


def test_resblock_residual_identity():
    block = SpadeStyleResBlock(4, 4, style_dim=3, hidden=4, spectral=False)
    _zero_(block.conv_0)
    _zero_(block.conv_1)
    x = torch.randn(1, 4, 8, 8)
    with torch.no_grad():
        out = block(x, one_hot(torch.randint(0, 4, (1, 8, 8))), torch.randn(3))
    assert torch.equal(out, x)


def test_resblock_keeps_spatial_size_and_learns_shortcut():
    block = SpadeStyleResBlock(6, 3, style_dim=3, hidden=4)
    out = block(torch.randn(2, 6, 8, 8), one_hot(torch.randint(0, 4, (2, 8, 8))), torch.randn(2, 3))
    assert out.shape == (2, 3, 8, 8)
    with pytest.raises(ShapeMismatchError):
        block(torch.randn(1, 5, 8, 8), one_hot(torch.randint(0, 4, (1, 8, 8))), torch.randn(3))


def test_instance_norm_and_adain_gradients(float64):
    g = torch.Generator().manual_seed(6)
    x = torch.randn(1, 2, 4, 4, generator=g, requires_grad=True)
    style = torch.randn(3, generator=g, requires_grad=True)
    weight = torch.randn(4, 3, generator=g, requires_grad=True)
    bias = torch.randn(4, generator=g, requires_grad=True)
    assert gradcheck(instance_norm, (x,))
    assert gradcheck(adain, (x, style, weight, bias))


def test_spade_block_gradients(float64):
    g = torch.Generator().manual_seed(7)
    block = SpadeStyleBlock(channels=3, style_dim=2, hidden=4)
    mask = one_hot(torch.randint(0, 4, (1, 6, 6), generator=g), dtype=torch.float64)
    x = torch.randn(1, 3, 6, 6, generator=g, requires_grad=True)
    style = torch.randn(2, generator=g, requires_grad=True)
    assert gradcheck(lambda x, s: block(x, mask, s), (x, style))


def test_resblock_gradient(float64):
    g = torch.Generator().manual_seed(8)
    block = SpadeStyleResBlock(4, 4, style_dim=3, hidden=4, spectral=False)
    mask = one_hot(torch.randint(0, 4, (1, 6, 6), generator=g), dtype=torch.float64)
    style = torch.randn(3, generator=g)
    x = torch.randn(1, 4, 6, 6, generator=g, requires_grad=True)
    assert gradcheck(lambda x: block(x, mask, style).sum(), (x,), eps=1e-6, atol=1e-6, rtol=1e-4)
