import hashlib

import torch.nn as nn

from src.apps.config import MODEL_KINDS
from src.apps.networks.discriminator import MultiscaleDiscriminator
from src.apps.networks.generator import SSSGenerator
from src.apps.networks.style_encoder import StyleEncoder
from src.apps.networks.unet import build_refiner, build_segmenter
from src.apps.utils.exceptions import ModelKindError


class SSSGAN(nn.Module):
    """
    Generator, multi-scale discriminator and style encoder trained together and checkpointed as one model.
    """
    def __init__(self, config):
        super().__init__()
        self.generator = SSSGenerator(
            num_classes=config.num_classes, resolution=config.resolution,
            widths=config.generator_widths, style_dim=config.style_dim,
            spade_hidden=config.spade_hidden, spectral=config.spectral,
            style_injection=config.style_injection,
        )
        self.discriminator = MultiscaleDiscriminator(
            num_classes=config.num_classes, num_scales=config.disc_scales,
            n_layers=config.disc_layers, base_width=config.disc_base_width, spectral=config.spectral,
        )
        self.style_encoder = StyleEncoder(
            resolution=config.resolution, widths=config.encoder_widths,
            style_dim=config.style_dim, spectral=config.spectral,
        )

    def generator_parameters(self):
        """Parameters updated by the G step: generator and (jointly trained) style encoder."""
        return list(self.generator.parameters()) + list(self.style_encoder.parameters())

    def discriminator_parameters(self):
        return list(self.discriminator.parameters())


def build_model(kind, config):
    if kind == 'segmenter':
        return build_segmenter(config.unet_widths)
    if kind == 'refiner':
        return build_refiner(config.unet_widths, zero_init_head=config.zero_init_residual)
    if kind == 'gan':
        return SSSGAN(config)
    raise ModelKindError(f"Unknown model kind '{kind}', expected one of {MODEL_KINDS}")


def parameter_digest(modules):
    """SHA-1 over the raw bytes of every parameter, in registration order."""
    digest = hashlib.sha1()
    if isinstance(modules, nn.Module):
        modules = [modules]
    for module in modules:
        for name, param in module.named_parameters():
            digest.update(name.encode('utf-8'))
            digest.update(param.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()
