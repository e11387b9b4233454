import json
import struct

import pytest
import torch

from src.apps.config import CHECKPOINT_FORMAT_VERSION
from src.apps.networks.discriminator import discriminate
from src.apps.networks.model_factory import build_model
from src.apps.networks.unet import build_segmenter
from src.apps.repositories.checkpoint_repository import MAGIC, CheckpointRepository, file_hash
from src.apps.utils.exceptions import (
    CheckpointManifestError, CheckpointTruncatedError, CheckpointVersionError, DatasetIOError, ModelKindError,
)


@pytest.fixture
def repo():
    return CheckpointRepository()


def _trained_segmenter():
    torch.manual_seed(0)
    model = build_segmenter((4, 8))
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss = model(torch.rand(2, 1, 16, 16)).square().mean()
    loss.backward()
    optimizer.step()
    return model, optimizer


def test_save_and_load_is_bit_exact(repo, tmp_path):
    model, optimizer = _trained_segmenter()
    path = repo.save(tmp_path / 'seg.ckpt', 'segmenter', model, {'main': optimizer}, {'note': 'x'}, 7)
    checkpoint = repo.load(path, expected_kind='segmenter')
    assert checkpoint.step == 7
    assert checkpoint.config == {'note': 'x'}
    for name, tensor in model.state_dict().items():
        assert torch.equal(checkpoint.tensors[name], tensor)
        assert checkpoint.tensors[name].dtype == tensor.dtype

    restored = repo.restore_model(checkpoint, build_segmenter((4, 8)))
    for name, tensor in model.state_dict().items():
        assert torch.equal(restored.state_dict()[name], tensor)


def test_gan_checkpoint_keeps_spectral_buffers(repo, tmp_path, tiny_model_config):
    torch.manual_seed(1)
    gan = build_model('gan', tiny_model_config)
    discriminate(torch.randint(0, 4, (32, 32)), torch.rand(32, 32), gan.discriminator)
    path = repo.save(tmp_path / 'gan.ckpt', 'gan', gan, {}, {'model': tiny_model_config.to_dict()}, 0)
    torch.manual_seed(2)
    fresh = repo.restore_model(repo.load(path, 'gan'), build_model('gan', tiny_model_config))
    for name, tensor in gan.state_dict().items():
        assert torch.equal(fresh.state_dict()[name], tensor), name


def test_optimizer_state_restores(repo, tmp_path):
    model, optimizer = _trained_segmenter()
    path = repo.save(tmp_path / 'seg.ckpt', 'segmenter', model, {'main': optimizer}, {}, 1)
    checkpoint = repo.load(path)
    clone = repo.restore_model(checkpoint, build_segmenter((4, 8)))
    clone_opt = repo.restore_optimizer(checkpoint, 'main', torch.optim.Adam(clone.parameters(), lr=1e-3), clone)
    for (name, param), clone_param in zip(model.named_parameters(), clone.parameters()):
        original, copied = optimizer.state[param], clone_opt.state[clone_param]
        assert torch.equal(original['exp_avg'], copied['exp_avg']), name
        assert torch.equal(original['exp_avg_sq'], copied['exp_avg_sq']), name
        assert float(copied['step']) == 1.0


def test_wrong_kind_is_rejected(repo, tmp_path):
    model, _ = _trained_segmenter()
    path = repo.save(tmp_path / 'seg.ckpt', 'segmenter', model, {}, {}, 0)
    with pytest.raises(ModelKindError):
        repo.load(path, expected_kind='gan')
    with pytest.raises(ModelKindError):
        repo.save(tmp_path / 'x.ckpt', 'vae', model, {}, {}, 0)


def test_version_mismatch(repo, tmp_path):
    header = json.dumps({'format_version': CHECKPOINT_FORMAT_VERSION + 1, 'kind': 'segmenter',
                         'config': {}, 'step': 0, 'manifest': []}).encode()
    path = tmp_path / 'old.ckpt'
    path.write_bytes(MAGIC + struct.pack('<Q', len(header)) + header)
    with pytest.raises(CheckpointVersionError):
        repo.load(path)


def test_truncated_files(repo, tmp_path):
    model, _ = _trained_segmenter()
    path = repo.save(tmp_path / 'seg.ckpt', 'segmenter', model, {}, {}, 0)
    raw = path.read_bytes()
    for cut in (4, len(MAGIC) + 12, len(raw) - 3):
        broken = tmp_path / f"cut{cut}.ckpt"
        broken.write_bytes(raw[:cut])
        with pytest.raises(CheckpointTruncatedError):
            repo.load(broken)


def test_manifest_mismatch_with_model(repo, tmp_path):
    model, _ = _trained_segmenter()
    path = repo.save(tmp_path / 'seg.ckpt', 'segmenter', model, {}, {}, 0)
    with pytest.raises(CheckpointManifestError):
        repo.restore_model(repo.load(path), build_segmenter((4, 16)))


def test_missing_file_and_hash(repo, tmp_path):
    with pytest.raises(DatasetIOError):
        repo.load(tmp_path / 'absent.ckpt')
    model, _ = _trained_segmenter()
    first = repo.save(tmp_path / 'a.ckpt', 'segmenter', model, {}, {}, 0)
    second = repo.save(tmp_path / 'b.ckpt', 'segmenter', model, {}, {}, 0)
    assert file_hash(first) == file_hash(second)
    assert len(file_hash(first)) == 16
