import json
import logging
from pathlib import Path

from src.apps.config import get_cache_dir
from src.apps.models.config_model import TrainConfig
from src.apps.models.dataset_model import DatasetConfig
from src.apps.repositories.checkpoint_repository import CheckpointRepository
from src.apps.repositories.dataset_repository import DatasetRepository, read_mask
from src.apps.repositories.pseudo_label_repository import PseudoLabelRepository
from src.apps.repositories.ranking_repository import RankingRepository
from src.apps.usecases.evaluation_usecase import evaluate_dirs
from src.apps.usecases.gan_training_usecase import train_gan
from src.apps.usecases.inference_usecase import InferenceUseCase
from src.apps.usecases.model_loader import load_trained_model
from src.apps.usecases.ranking_usecase import RankingUseCase
from src.apps.usecases.refiner_training_usecase import train_refiner
from src.apps.usecases.segmenter_training_usecase import train_segmenter
from src.apps.usecases.synthdata_usecase import SynthDataUseCase
from src.apps.utils.exceptions import DatasetIOError, UsageError
from src.apps.utils.validators import validate_dataset_config, validate_train_config
from src.middlewares.error_middleware import handle_command_errors

logger = logging.getLogger(__name__)


def _read_config_file(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as e:
        raise DatasetIOError(path, f"Cannot read config ({e})") from e
    except ValueError as e:
        raise UsageError(f"Config {path} is not valid JSON ({e})") from e


def _overrides(args, mapping):
    """Flag values that were given on the command line, keyed by config field name."""
    return {field: getattr(args, flag) for flag, field in mapping.items() if getattr(args, flag, None) is not None}


class CommandController:
    """
    One method per CLI command. Each logs the request, validates its payload,
    calls the use case and renders the result to stdout.
    """
    def __init__(self, checkpoint_repo=None, ranking_repo=None):
        self.checkpoint_repo = checkpoint_repo or CheckpointRepository()
        self.ranking_repo = ranking_repo or RankingRepository()
        self.inference = InferenceUseCase(self.checkpoint_repo)

    # -- helpers -------------------------------------------------------------
    def _train_config(self, args, stage):
        data = _read_config_file(args.config)
        data.update(_overrides(args, {
            'dataset': 'dataset_root', 'out_dir': 'out_dir', 'steps': 'steps', 'seed': 'seed',
            'segmenter': 'segmenter_checkpoint', 'rankings': 'rankings',
        }))
        data['stage'] = stage
        errors = validate_train_config(data)
        if errors:
            raise UsageError(' '.join(errors))
        return TrainConfig.from_dict(data)

    def _ranking_usecase(self, dataset_repo, segmenter_checkpoint):
        segmenter, _, checkpoint_hash = load_trained_model(self.checkpoint_repo, segmenter_checkpoint, 'segmenter')
        cache = PseudoLabelRepository(get_cache_dir(), checkpoint_hash)
        return RankingUseCase(dataset_repo, cache, segmenter)

    # -- commands ------------------------------------------------------------
    @handle_command_errors
    def synth_data(self, args):
        data = _read_config_file(args.config)
        data.update(_overrides(args, {'out': 'root', 'seed': 'seed'}))
        errors = validate_dataset_config(data)
        if errors:
            raise UsageError(' '.join(errors))
        config = DatasetConfig(**data)
        logger.info(f"Synthesizing {config.persons} persons x {config.images_per_person} images into {config.root}.")
        SynthDataUseCase(DatasetRepository(config.root)).build_dataset(config)

    @handle_command_errors
    def train_seg(self, args):
        config = self._train_config(args, 'segmenter')
        result = train_segmenter(config, DatasetRepository(config.dataset_root), self.checkpoint_repo, args.resume)
        print(json.dumps({'checkpoint': result.checkpoint, 'step': result.step, **result.validation}))

    @handle_command_errors
    def pseudo_label(self, args):
        usecase = self._ranking_usecase(DatasetRepository(args.dataset), args.segmenter)
        count = usecase.pseudo_label_all()
        print(json.dumps({'predicted': count, 'cache': str(usecase.pseudo_label_repo.cache_dir)}))

    @handle_command_errors
    def rank(self, args):
        usecase = self._ranking_usecase(DatasetRepository(args.dataset), args.segmenter)
        if args.target_mask is not None:
            if args.person is None:
                raise UsageError("--target-mask requires --person")
            ranked = usecase.rank_person(read_mask(args.target_mask), args.person)
            self.ranking_repo.save_ranked_list(args.out, ranked)
        else:
            rankings = usecase.rank_all()
            self.ranking_repo.save_rankings(args.out, rankings)
        if args.class_means_out:
            self.ranking_repo.save_class_means(args.class_means_out, usecase.class_means())
        logger.info(f"Rankings written to {args.out}.")

    @handle_command_errors
    def train_refiner(self, args):
        config = self._train_config(args, 'refiner')
        if not config.segmenter_checkpoint or not config.rankings:
            raise UsageError("train-refiner needs --segmenter and --rankings")
        dataset_repo = DatasetRepository(config.dataset_root)
        usecase = self._ranking_usecase(dataset_repo, config.segmenter_checkpoint)
        rankings = self.ranking_repo.load_rankings(config.rankings)
        result = train_refiner(config, dataset_repo, self.checkpoint_repo, usecase, rankings, args.resume)
        print(json.dumps({'checkpoint': result.checkpoint, 'step': result.step, **result.validation}))

    @handle_command_errors
    def train_gan(self, args):
        config = self._train_config(args, 'gan')
        if not config.rankings:
            raise UsageError("train-gan needs --rankings")
        segmenter = None
        if config.segmenter_checkpoint:
            segmenter, _, _ = load_trained_model(self.checkpoint_repo, config.segmenter_checkpoint, 'segmenter')
        rankings = self.ranking_repo.load_rankings(config.rankings)
        result = train_gan(
            config, DatasetRepository(config.dataset_root), self.checkpoint_repo, rankings, segmenter, args.resume,
        )
        print(json.dumps({'checkpoint': result.checkpoint, 'step': result.step, **result.validation}))

    @handle_command_errors
    def generate(self, args):
        metric = self.inference.generate(args.checkpoint, args.mask, args.style_images, args.out, args.target)
        if metric is not None:
            print(json.dumps({'challenge_metric': metric}))

    @handle_command_errors
    def interpolate(self, args):
        self.inference.interpolate(args.checkpoint, args.mask, args.style_a, args.style_b, args.steps, args.out_dir)

    @handle_command_errors
    def refine(self, args):
        self.inference.refine(
            args.checkpoint, args.target_mask, args.reference, args.out,
            residual_path=args.residual_out, ref_mask_path=args.ref_mask, segmenter_checkpoint=args.segmenter,
        )

    @handle_command_errors
    def evaluate(self, args):
        result = evaluate_dirs(args.pred_dir, args.target_dir)
        print(json.dumps(result, indent=2))
        print(f"mean challenge metric: {result['mean']}")
