import itertools

import pytest
import torch
from torch.autograd import gradcheck

from src.apps.core.tensor_ops import one_hot, to_disk
from src.apps.models.config_model import ModelConfig
from src.apps.networks.discriminator import MultiscaleDiscriminator, discriminate
from src.apps.networks.generator import OUTPUT_BOUND, SSSGenerator, generate
from src.apps.networks.model_factory import build_model, parameter_digest
from src.apps.networks.style_encoder import StyleEncoder, aggregate_styles, encode_style
from src.apps.networks.unet import build_refiner, build_segmenter, refine, segment
from src.apps.utils.exceptions import ModelKindError, ShapeMismatchError


def _mask(size=64, seed=0):
    return torch.randint(0, 4, (size, size), generator=torch.Generator().manual_seed(seed))


def test_generator_output_shape_and_range():
    generator = SSSGenerator(resolution=64, widths=(32, 16, 16, 8), style_dim=8, spade_hidden=8).eval()
    with torch.no_grad():
        image = generate(_mask(), torch.randn(8), generator)
    assert image.shape == (64, 64)
    assert image.abs().max() < 1.0


def test_saturated_generator_stays_inside_the_open_range():
    generator = SSSGenerator(resolution=32, widths=(8, 8, 8, 8), style_dim=4, spade_hidden=4).eval()
    with torch.no_grad():
        generator.conv_img.weight.zero_()
        for bias, bound in ((100.0, OUTPUT_BOUND), (-100.0, -OUTPUT_BOUND)):
            generator.conv_img.bias.fill_(bias)
            image = generate(_mask(32), torch.randn(4), generator)
            assert torch.all(image == bound)
            assert image.abs().max() < 1.0
            assert set(to_disk(image).ravel().tolist()) == {255 if bias > 0 else 0}


def test_generator_is_deterministic_in_eval_mode():
    generator = SSSGenerator(resolution=32, widths=(8, 8, 8, 8), style_dim=4, spade_hidden=4).eval()
    style = torch.randn(4)
    with torch.no_grad():
        assert torch.equal(generate(_mask(32), style, generator), generate(_mask(32), style, generator))


def test_generator_rejects_bad_inputs():
    generator = SSSGenerator(resolution=32, widths=(8, 8, 8, 8), style_dim=4, spade_hidden=4)
    with pytest.raises(ShapeMismatchError):
        generate(_mask(32), torch.randn(5), generator)
    with pytest.raises(ShapeMismatchError):
        generate(_mask(24), torch.randn(4), generator)


def test_style_injection_ablation_ignores_style():
    generator = SSSGenerator(resolution=32, widths=(8, 8, 8, 8), style_dim=4, spade_hidden=4,
                             style_injection=False).eval()
    with torch.no_grad():
        assert torch.equal(generate(_mask(32), torch.randn(4), generator), generate(_mask(32), torch.randn(4), generator))


def test_style_encoder_shapes():
    encoder = StyleEncoder(resolution=64, widths=(8, 8, 16, 16), style_dim=12)
    code, feats = encode_style(torch.rand(64, 64) * 2 - 1, encoder)
    assert code.shape == (12,)
    assert [f.shape[-1] for f in feats] == [32, 16, 8, 4]
    with pytest.raises(ShapeMismatchError):
        encoder(torch.rand(32, 32))


def test_aggregation_properties():
    g = torch.Generator().manual_seed(1)
    for _ in range(100):
        k = int(torch.randint(1, 5, (1,), generator=g))
        codes = list(torch.randn(k, 6, generator=g))
        aggregated = aggregate_styles(codes)
        for perm in itertools.permutations(range(k)):
            assert torch.equal(aggregate_styles([codes[i] for i in perm]), aggregated)
        assert torch.equal(aggregate_styles(codes + codes), aggregated)
        assert torch.equal(aggregate_styles([aggregated, aggregated]), aggregated)
        bumped = [c.clone() for c in codes]
        bumped[0] += 0.5
        assert torch.all(aggregate_styles(bumped) >= aggregated)
        assert torch.equal(aggregate_styles(codes[:1]), codes[0])


def test_aggregation_errors():
    with pytest.raises(ValueError):
        aggregate_styles([])
    with pytest.raises(ShapeMismatchError):
        aggregate_styles([torch.zeros(3), torch.zeros(4)])


def test_discriminator_logit_maps():
    discriminator = MultiscaleDiscriminator(num_scales=2, n_layers=4, base_width=8)
    outputs = discriminate(_mask(), torch.rand(64, 64), discriminator)
    assert len(outputs) == 2
    logits, feats = outputs[0]
    assert logits.shape == (1, 1, 6, 6)
    assert len(feats) == 4


def test_segmenter_and_refiner_shapes():
    segmenter = build_segmenter((8, 16, 32))
    assert segment(torch.rand(32, 32), segmenter).shape == (4, 32, 32)
    refiner = build_refiner((8, 16))
    residual, refined = refine(_mask(32), _mask(32, 1), torch.rand(32, 32) * 2 - 1, refiner)
    assert residual.shape == refined.shape == (32, 32)


def test_refiner_with_zero_head_returns_reference():
    refiner = build_refiner((8, 16), zero_init_head=True).eval()
    reference = torch.rand(2, 32, 32) * 2 - 1
    with torch.no_grad():
        residual, refined = refine(_mask(32).expand(2, 32, 32), _mask(32, 1).expand(2, 32, 32), reference, refiner)
    assert torch.all(residual == 0)
    assert torch.equal(refined, reference)


def test_build_model_kinds(tiny_model_config):
    assert build_model('segmenter', tiny_model_config).in_channels == 1
    gan = build_model('gan', tiny_model_config)
    assert gan.generator.seed_size == 2
    assert len(gan.generator_parameters()) == (
        len(list(gan.generator.parameters())) + len(list(gan.style_encoder.parameters()))
    )
    with pytest.raises(ModelKindError):
        build_model('vae', tiny_model_config)


def test_parameter_digest_tracks_changes():
    module = build_segmenter((4, 8))
    before = parameter_digest(module)
    assert parameter_digest(module) == before
    with torch.no_grad():
        next(module.parameters()).add_(1.0)
    assert parameter_digest(module) != before


def test_generate_path_gradient_wrt_style(float64):
    generator = SSSGenerator(resolution=16, widths=(4, 4), style_dim=3, spade_hidden=4, spectral=False).eval()
    mask = _mask(16, 2)
    style = torch.randn(3, requires_grad=True)
    assert gradcheck(lambda s: generate(mask, s, generator), (style,), eps=1e-6, atol=1e-5, rtol=1e-3)


def test_style_encoder_gradient(float64):
    encoder = StyleEncoder(resolution=16, widths=(4, 4), style_dim=3, spectral=False)
    img = torch.randn(16, 16, requires_grad=True)
    assert gradcheck(lambda x: encoder(x)[0], (img,))


def test_model_config_round_trip_keeps_tuples():
    config = ModelConfig(generator_widths=(8, 4), spectral=False)
    assert ModelConfig.from_dict(config.to_dict()) == config
