from dataclasses import dataclass, field, asdict, fields

from src.apps.config import DEFAULT_RESOLUTION, DEFAULT_STYLE_DIM, NUM_CLASSES
from src.apps.models.loss_model import LossWeights

STAGES = ('segmenter', 'refiner', 'gan')


@dataclass
class ModelConfig:
    """
    Every shape-defining key. Stored in checkpoint headers so models can be rebuilt.
    """
    resolution: int = DEFAULT_RESOLUTION
    num_classes: int = NUM_CLASSES
    style_dim: int = DEFAULT_STYLE_DIM
    generator_widths: tuple = (256, 128, 64, 32)
    encoder_widths: tuple = (16, 32, 64, 128)
    spade_hidden: int = 32
    disc_scales: int = 2
    disc_layers: int = 4
    disc_base_width: int = 32
    unet_widths: tuple = (16, 32, 64, 128)
    spectral: bool = True
    style_injection: bool = True
    zero_init_residual: bool = True

    def to_dict(self):
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in (data or {}).items():
            if key in known:
                values[key] = tuple(value) if isinstance(value, list) else value
        return cls(**values)


@dataclass
class TrainConfig:
    """
    One training stage. JSON config files use exactly these field names;
    `model` and `loss_weights` are nested objects.
    """
    stage: str = 'segmenter'
    dataset_root: str = 'data'
    out_dir: str = 'runs'
    resolution: int = DEFAULT_RESOLUTION
    batch_size: int = 8
    steps: int = 2000
    seed: int = 0
    k_style_images: int = 4
    style_pool_top_n: int = 200
    lr_g: float = 1e-4
    lr_d: float = 4e-4
    lr: float = 2e-4
    betas_adversarial: tuple = (0.0, 0.9)
    betas: tuple = (0.9, 0.999)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    l1_reduction: str = 'mean'
    checkpoint_every: int = 500
    log_every: int = 50
    metrics_log: str = None
    segmenter_checkpoint: str = None
    rankings: str = None
    verify_step_isolation: bool = False
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        # resolution is duplicated for convenience; the model copy is authoritative in checkpoints
        self.model.resolution = self.resolution

    def to_dict(self):
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ('loss_weights', 'model'):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data):
        values = dict(data)
        if 'loss_weights' in values:
            values['loss_weights'] = LossWeights.from_dict(values['loss_weights'])
        if 'model' in values:
            values['model'] = ModelConfig.from_dict(values['model'])
        for key in ('betas_adversarial', 'betas'):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)
