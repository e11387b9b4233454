import sys

from src.apps.models.dataset_model import DatasetConfig
from src.apps.repositories.dataset_repository import DatasetRepository
from src.apps.usecases.synthdata_usecase import SynthDataUseCase
from src.infrastructures.config.logging_config import configure_logging

# Builds the default desk dataset (10 persons x 20 images, 30% labeled) under ./data
# or under the directory given as the first argument.
configure_logging()
root = sys.argv[1] if len(sys.argv) > 1 else 'data'
index = SynthDataUseCase(DatasetRepository(root)).build_dataset(DatasetConfig(root=root))

print(f"Dataset initialized at {root} with {len(index.persons)} persons and {len(index.labeled())} labeled images.")
