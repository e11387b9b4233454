"""
Full-scale pipeline runs on the default 64x64 dataset. These take tens of minutes
on a CPU and are deselected by default; run them with `pytest -m slow`.
"""
import numpy as np
import pytest
import torch

from src.apps.core.eye_renderer import render_eye, render_mask, sample_person, sample_pose
from src.apps.core.seeding import derive_rng
from src.apps.models.config_model import TrainConfig
from src.apps.models.dataset_model import DatasetConfig
from src.apps.models.eye_model import EyePose
from src.apps.networks.style_encoder import encode_style
from src.apps.repositories.checkpoint_repository import CheckpointRepository
from src.apps.repositories.dataset_repository import DatasetRepository, read_png
from src.apps.repositories.metrics_repository import MetricsRepository
from src.apps.repositories.pseudo_label_repository import PseudoLabelRepository
from src.apps.usecases.gan_training_usecase import train_gan
from src.apps.usecases.inference_usecase import InferenceUseCase
from src.apps.usecases.model_loader import load_trained_model
from src.apps.usecases.ranking_usecase import RankingUseCase, rank_candidates
from src.apps.usecases.refiner_training_usecase import train_refiner
from src.apps.usecases.segmenter_training_usecase import train_segmenter
from src.apps.usecases.synthdata_usecase import SynthDataUseCase

pytestmark = pytest.mark.slow

BENCHMARK_PERSONS = 10
BENCHMARK_POOL = 20
NEAR_POSES = 5
RESOLUTION = 64


@pytest.fixture(scope='module')
def desk(tmp_path_factory):
    """Dataset, trained segmenter and rankings shared by every desk run."""
    workdir = tmp_path_factory.mktemp('desk')
    dataset_config = DatasetConfig(root=str(workdir / 'data'))
    dataset_repo = DatasetRepository(dataset_config.root)
    SynthDataUseCase(dataset_repo).build_dataset(dataset_config)

    checkpoint_repo = CheckpointRepository()
    seg_config = TrainConfig(stage='segmenter', dataset_root=dataset_config.root, out_dir=str(workdir / 'seg'))
    seg_result = train_segmenter(seg_config, dataset_repo, checkpoint_repo)
    segmenter, _, seg_hash = load_trained_model(checkpoint_repo, seg_result.checkpoint, 'segmenter')
    ranking = RankingUseCase(dataset_repo, PseudoLabelRepository(workdir / 'cache', seg_hash), segmenter)
    return {
        'workdir': workdir, 'dataset_repo': dataset_repo, 'checkpoint_repo': checkpoint_repo,
        'segmenter': segmenter, 'segmenter_result': seg_result, 'ranking': ranking,
        'rankings': ranking.rank_all(),
    }


@pytest.fixture(scope='module')
def gan_run(desk):
    out_dir = desk['workdir'] / 'gan'
    config = TrainConfig(stage='gan', dataset_root=str(desk['dataset_repo'].root), out_dir=str(out_dir))
    result = train_gan(config, desk['dataset_repo'], desk['checkpoint_repo'], desk['rankings'], desk['segmenter'])
    model, _, _ = load_trained_model(desk['checkpoint_repo'], result.checkpoint, 'gan')
    return {'out_dir': out_dir, 'result': result, 'model': model}


def _near(pose, rng):
    return EyePose(
        gaze_x=pose.gaze_x + rng.uniform(-0.02, 0.02),
        gaze_y=pose.gaze_y + rng.uniform(-0.02, 0.02),
        eyelid_openness=pose.eyelid_openness + rng.uniform(-0.03, 0.03),
    )


def _far(pose, rng):
    while True:
        other = sample_pose(rng)
        if (abs(other.gaze_x - pose.gaze_x) >= 0.1 or abs(other.gaze_y - pose.gaze_y) >= 0.1
                or abs(other.eyelid_openness - pose.eyelid_openness) >= 0.2):
            return other


def _pool(style, poses, prefix, noise_offset):
    return [
        (f"{prefix}_{i:02d}.png", torch.from_numpy(render_eye(style, pose, RESOLUTION, RESOLUTION,
                                                              noise_seed=noise_offset + i)[0]))
        for i, pose in enumerate(poses)
    ]


def test_segmenter_desk_run(desk):
    result = desk['segmenter_result']
    assert result.validation['val_mean_iou'] >= 0.85
    losses = [r['loss'] for r in MetricsRepository(desk['workdir'] / 'seg' / 'segmenter_metrics.jsonl').read()
              if 'loss' in r]
    assert losses[499] < losses[0]


def test_trained_segmenter_ranking_benchmark(desk):
    segmenter, means = desk['segmenter'], desk['ranking'].class_means()
    first_hits, precisions = 0, []
    for trial in range(100):
        rng = derive_rng(2024, trial)
        style = sample_person(trial % BENCHMARK_PERSONS, 0)
        target = sample_pose(rng)
        target_mask = render_mask(style, target, RESOLUTION, RESOLUTION)
        far = [_far(target, rng) for _ in range(BENCHMARK_POOL - 1)]

        # exact pose under fresh noise among far poses
        pool = _pool(style, [target], 'same', 1000 * trial + 1) + _pool(style, far, 'far', 1000 * trial + 100)
        ranked = rank_candidates(target_mask, pool, segmenter, means)
        first_hits += ranked.paths()[0] == 'same_00.png'

        near = [_near(target, rng) for _ in range(NEAR_POSES)]
        pool = (_pool(style, near, 'near', 1000 * trial + 200)
                + _pool(style, far[:BENCHMARK_POOL - NEAR_POSES], 'far', 1000 * trial + 300))
        top = rank_candidates(target_mask, pool, segmenter, means).paths()[:NEAR_POSES]
        precisions.append(sum(path.startswith('near_') for path in top) / NEAR_POSES)
    assert first_hits >= 95
    assert np.mean(precisions) >= 0.9


def test_refiner_desk_run(desk):
    config = TrainConfig(stage='refiner', dataset_root=str(desk['dataset_repo'].root),
                         out_dir=str(desk['workdir'] / 'refiner'))
    result = train_refiner(config, desk['dataset_repo'], desk['checkpoint_repo'], desk['ranking'], desk['rankings'])
    assert result.validation['val_challenge_refined'] <= 0.75 * result.validation['val_challenge_baseline']


def test_gan_desk_run_and_interpolation(desk, gan_run):
    result, out_dir = gan_run['result'], gan_run['out_dir']
    initial = MetricsRepository(out_dir / 'gan_metrics.jsonl').read()[0]
    assert initial['step'] == 0
    assert result.validation['val_l2'] <= 0.5 * initial['val_l2']
    assert result.validation['val_content_iou'] >= 0.6
    assert result.validation['val_style_triplet_accuracy'] >= 0.8

    dataset_repo = desk['dataset_repo']
    index = dataset_repo.load_index()
    _, record = index.labeled('val')[0]
    first, second = index.persons[0], index.persons[1]
    style_a = [str(dataset_repo.root / r.img) for _, r in index.unlabeled(first.id)][:4]
    style_b = [str(dataset_repo.root / r.img) for _, r in index.unlabeled(second.id)][:4]
    frames = InferenceUseCase(desk['checkpoint_repo']).interpolate(
        result.checkpoint, dataset_repo.root / record.mask, style_a, style_b, 8, out_dir / 'walk',
    )
    images = [read_png(path).astype(np.float64) for path in frames]
    steps = [np.abs(images[i + 1] - images[i]).mean() for i in range(7)]
    assert np.mean(steps) < np.abs(images[7] - images[0]).mean()


def test_trained_encoder_separates_persons(desk, gan_run):
    dataset_repo = desk['dataset_repo']
    index = dataset_repo.load_index()
    encoder = gan_run['model'].style_encoder
    images = {
        person.id: [r.img for _, r in index.unlabeled(person.id)] for person in index.persons
    }
    ids = sorted(images)

    def code(relpath):
        return encode_style(torch.as_tensor(dataset_repo.load_image(relpath)), encoder)[0]

    same, different = [], []
    with torch.no_grad():
        for n in range(50):
            a, b = ids[n % len(ids)], ids[(n + 1) % len(ids)]
            pool_a, pool_b = images[a], images[b]
            anchor = code(pool_a[n % len(pool_a)])
            same.append(float(torch.linalg.vector_norm(anchor - code(pool_a[(n + 1) % len(pool_a)]))))
            different.append(float(torch.linalg.vector_norm(anchor - code(pool_b[n % len(pool_b)]))))
    assert np.median(different) > np.median(same)
