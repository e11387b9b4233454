"""
Single-image inference with trained checkpoints: generation from style images,
style-code interpolation, and reference refinement.
"""
import logging
from pathlib import Path

import numpy as np
import torch
from torchvision.utils import make_grid

from src.apps.config import GRID_COLUMNS, RESIDUAL_GRAY_OFFSET
from src.apps.core.tensor_ops import to_disk
from src.apps.losses.metrics import challenge_metric
from src.apps.networks.generator import generate
from src.apps.networks.style_encoder import aggregate_styles, encode_style
from src.apps.networks.unet import refine, segment
from src.apps.repositories.dataset_repository import read_image, read_mask, read_png, write_png
from src.apps.usecases.model_loader import load_trained_model
from src.apps.utils.exceptions import UsageError

logger = logging.getLogger(__name__)


def residual_to_disk(residual):
    """Signed residual (internal units) -> uint8 with residual 0 at gray 128."""
    values = residual.detach().cpu().double().numpy() * 127.5 + RESIDUAL_GRAY_OFFSET
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def image_grid(frames8, columns=GRID_COLUMNS):
    """Row-major grid of equally sized uint8 frames."""
    batch = torch.stack([torch.as_tensor(frame) for frame in frames8]).unsqueeze(1)
    return make_grid(batch, nrow=columns, padding=2, pad_value=0)[0].numpy()


class InferenceUseCase:
    def __init__(self, checkpoint_repo):
        self.checkpoint_repo = checkpoint_repo

    def _gan(self, checkpoint):
        model, _, _ = load_trained_model(self.checkpoint_repo, checkpoint, 'gan')
        return model

    @staticmethod
    def style_code(style_paths, encoder):
        """Aggregated code of 1..k style images, each encoded on its own so input order cannot matter."""
        if not style_paths:
            raise UsageError("At least one style image is required")
        with torch.no_grad():
            codes = [encode_style(read_image(path), encoder)[0] for path in style_paths]
        return aggregate_styles(codes)

    def generate(self, checkpoint, mask_path, style_paths, out_path, target_path=None):
        """Writes the generated PNG. Returns the challenge metric against `target_path`, if given."""
        model = self._gan(checkpoint)
        style = self.style_code(style_paths, model.style_encoder)
        with torch.no_grad():
            image = generate(read_mask(mask_path), style, model.generator)
        write_png(out_path, to_disk(image))
        logger.info(f"Generated {out_path} from {len(style_paths)} style image(s).")
        if target_path is None:
            return None
        return challenge_metric(read_png(out_path), read_png(target_path))

    def interpolate(self, checkpoint, mask_path, style_a, style_b, steps, out_dir):
        """
        Decodes the straight line between the two aggregated style codes at
        `steps` evenly spaced points, endpoints included. Writes one PNG per
        frame plus grid.png; returns the frame paths.
        """
        if steps < 2:
            raise UsageError(f"Interpolation needs at least 2 steps, got {steps}")
        model = self._gan(checkpoint)
        code_a = self.style_code(style_a, model.style_encoder)
        code_b = self.style_code(style_b, model.style_encoder)
        mask = read_mask(mask_path)
        out_dir = Path(out_dir)
        paths, frames = [], []
        with torch.no_grad():
            for i in range(steps):
                alpha = i / (steps - 1)
                frame = to_disk(generate(mask, (1.0 - alpha) * code_a + alpha * code_b, model.generator))
                path = out_dir / f"frame_{i:03d}.png"
                write_png(path, frame)
                paths.append(path)
                frames.append(frame)
        write_png(out_dir / 'grid.png', image_grid(frames))
        logger.info(f"Wrote {steps} interpolation frames and a grid to {out_dir}.")
        return paths

    def refine(self, checkpoint, target_mask_path, reference_path, out_path,
               residual_path=None, ref_mask_path=None, segmenter_checkpoint=None):
        """
        Refines a reference image towards a target mask. The reference's mask is
        read from `ref_mask_path` or predicted by the segmenter checkpoint.
        """
        refiner, _, _ = load_trained_model(self.checkpoint_repo, checkpoint, 'refiner')
        reference = read_image(reference_path)
        with torch.no_grad():
            if ref_mask_path is not None:
                ref_mask = torch.as_tensor(read_mask(ref_mask_path)).long()
            elif segmenter_checkpoint is not None:
                segmenter, _, _ = load_trained_model(self.checkpoint_repo, segmenter_checkpoint, 'segmenter')
                ref_mask = segment(reference, segmenter).argmax(dim=0)
            else:
                raise UsageError("refine needs either --ref-mask or --segmenter")
            target_mask = torch.as_tensor(read_mask(target_mask_path)).long()
            residual, refined = refine(target_mask, ref_mask, reference, refiner)
        write_png(out_path, to_disk(refined))
        if residual_path is not None:
            write_png(residual_path, residual_to_disk(residual))
        logger.info(f"Refined {reference_path} into {out_path}.")
        return out_path
