import logging

from src.apps.models.config_model import ModelConfig
from src.apps.networks.model_factory import build_model
from src.apps.repositories.checkpoint_repository import file_hash

logger = logging.getLogger(__name__)


def load_trained_model(checkpoint_repo, path, kind):
    """
    Rebuilds a model from the config stored in the checkpoint header and loads
    its weights. Returns (model in eval mode, checkpoint, content hash).
    """
    checkpoint = checkpoint_repo.load(path, expected_kind=kind)
    model_config = ModelConfig.from_dict(checkpoint.config.get('model', {}))
    model = build_model(kind, model_config)
    checkpoint_repo.restore_model(checkpoint, model)
    model.eval()
    logger.info(f"Loaded {kind} model from {path} (step {checkpoint.step}).")
    return model, checkpoint, file_hash(path)
