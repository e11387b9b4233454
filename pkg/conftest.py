import pytest
import torch

from src.apps.models.config_model import ModelConfig, TrainConfig
from src.apps.models.dataset_model import DatasetConfig
from src.apps.models.ranking_model import RankedList
from src.apps.repositories.dataset_repository import DatasetRepository
from src.apps.usecases.synthdata_usecase import SynthDataUseCase

TINY_RESOLUTION = 32


@pytest.fixture(scope='session')
def tiny_dataset_config(tmp_path_factory):
    root = tmp_path_factory.mktemp('tiny_dataset')
    return DatasetConfig(
        root=str(root), persons=4, images_per_person=8, labeled_fraction=0.5,
        resolution=TINY_RESOLUTION, val_fraction=0.25, seed=3, workers=2,
    )


@pytest.fixture(scope='session')
def tiny_dataset(tiny_dataset_config):
    """DatasetRepository over a 4-person, 32x32 dataset: 3 train + 1 val labeled and 4 unlabeled images per person."""
    repo = DatasetRepository(tiny_dataset_config.root)
    SynthDataUseCase(repo).build_dataset(tiny_dataset_config)
    return repo


@pytest.fixture(scope='session')
def tiny_rankings(tiny_dataset):
    """Rankings over each labeled record's same-person unlabeled pool, ordered by path."""
    index = tiny_dataset.load_index()
    rankings = {}
    for person_id, record in index.labeled():
        pool = [r.img for _, r in index.unlabeled(person_id)]
        rankings[record.img] = RankedList.from_scores([(path, float(i)) for i, path in enumerate(pool)])
    return rankings


@pytest.fixture
def tiny_model_config():
    return ModelConfig(
        resolution=TINY_RESOLUTION, style_dim=8,
        generator_widths=(16, 16, 8, 8), encoder_widths=(8, 8, 16, 16), spade_hidden=8,
        disc_scales=2, disc_layers=3, disc_base_width=8, unet_widths=(8, 16),
    )


@pytest.fixture
def make_train_config(tiny_dataset, tiny_model_config, tmp_path):
    def factory(stage, **overrides):
        values = dict(
            stage=stage, dataset_root=str(tiny_dataset.root), out_dir=str(tmp_path / stage),
            resolution=TINY_RESOLUTION, batch_size=4, steps=3, seed=11, k_style_images=2,
            checkpoint_every=0, log_every=0, model=tiny_model_config,
        )
        values.update(overrides)
        return TrainConfig(**values)
    return factory


@pytest.fixture
def float64():
    """Runs the test with float64 as the default torch dtype."""
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield
    torch.set_default_dtype(previous)
