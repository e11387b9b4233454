"""
Checkpoint files.

Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON header
(format_version, kind, config, step, manifest), then raw little-endian float32
payloads in manifest order. Every manifest entry records name, shape, original
dtype, byte offset (relative to the payload start) and byte count.
"""
import hashlib
import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from src.apps.config import CHECKPOINT_FORMAT_VERSION, MODEL_KINDS
from src.apps.utils.exceptions import (
    CheckpointManifestError, CheckpointTruncatedError, CheckpointVersionError, DatasetIOError, ModelKindError,
)

logger = logging.getLogger(__name__)

MAGIC = b'SEG2EYE\x00'
_LENGTH = struct.Struct('<Q')
OPTIM_PREFIX = 'optim'


@dataclass
class Checkpoint:
    kind: str
    config: dict
    step: int
    tensors: dict
    manifest: list


def file_hash(path, length=16):
    """Content hash of a checkpoint file, used to key caches."""
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()[:length]


def _optimizer_tensors(opt_name, optimizer, model):
    names = {id(p): name for name, p in model.named_parameters()}
    tensors = {}
    for group in optimizer.param_groups:
        for param in group['params']:
            state = optimizer.state.get(param)
            if not state:
                continue
            for key, value in state.items():
                if not isinstance(value, torch.Tensor):
                    value = torch.tensor(float(value))
                tensors[f"{OPTIM_PREFIX}/{opt_name}/{names[id(param)]}/{key}"] = value
    return tensors


class CheckpointRepository:
    def save(self, path, kind, model, optimizers, config, step):
        """
        optimizers: mapping of name -> torch optimizer over parameters of `model`.
        """
        if kind not in MODEL_KINDS:
            raise ModelKindError(f"Unknown model kind '{kind}'")
        tensors = dict(model.state_dict())
        for opt_name, optimizer in (optimizers or {}).items():
            tensors.update(_optimizer_tensors(opt_name, optimizer, model))

        manifest, payloads, offset = [], [], 0
        for name, tensor in tensors.items():
            data = tensor.detach().cpu().to(torch.float32).contiguous().numpy().astype('<f4').tobytes()
            manifest.append({
                'name': name, 'shape': list(tensor.shape), 'dtype': str(tensor.dtype).replace('torch.', ''),
                'offset': offset, 'nbytes': len(data),
            })
            payloads.append(data)
            offset += len(data)

        header = json.dumps({
            'format_version': CHECKPOINT_FORMAT_VERSION, 'kind': kind, 'config': config,
            'step': int(step), 'manifest': manifest,
        }).encode('utf-8')

        path = Path(path)
        tmp = path.with_name(path.name + '.tmp')
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(tmp, 'wb') as handle:
                handle.write(MAGIC)
                handle.write(_LENGTH.pack(len(header)))
                handle.write(header)
                for data in payloads:
                    handle.write(data)
            os.replace(tmp, path)
        except OSError as e:
            logger.error(f"Failed to write checkpoint {path}: {e}", exc_info=True)
            raise DatasetIOError(path, f"Cannot write checkpoint ({e})") from e
        logger.info(f"Saved {kind} checkpoint at step {step} to {path}.")
        return path

    def load(self, path, expected_kind=None):
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise DatasetIOError(path, f"Cannot read checkpoint ({e})") from e

        prefix = len(MAGIC) + _LENGTH.size
        if len(raw) < prefix or raw[:len(MAGIC)] != MAGIC:
            raise CheckpointTruncatedError(f"{path} is not a checkpoint or is truncated before its header")
        (header_len,) = _LENGTH.unpack(raw[len(MAGIC):prefix])
        if len(raw) < prefix + header_len:
            raise CheckpointTruncatedError(f"{path} is truncated inside its header")
        try:
            header = json.loads(raw[prefix:prefix + header_len].decode('utf-8'))
        except ValueError as e:
            raise CheckpointManifestError(f"{path} has an unreadable header ({e})") from e

        version = header.get('format_version')
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointVersionError(
                f"{path} has format version {version}, expected {CHECKPOINT_FORMAT_VERSION}"
            )
        kind = header.get('kind')
        if expected_kind is not None and kind != expected_kind:
            raise ModelKindError(f"{path} holds a '{kind}' model, expected '{expected_kind}'")

        payload = memoryview(raw)[prefix + header_len:]
        tensors = {}
        for entry in header['manifest']:
            start, nbytes = entry['offset'], entry['nbytes']
            count = int(np.prod(entry['shape'])) if entry['shape'] else 1
            if nbytes != 4 * count:
                raise CheckpointManifestError(f"Entry {entry['name']} declares {nbytes} bytes for shape {entry['shape']}")
            if start + nbytes > len(payload):
                raise CheckpointTruncatedError(f"{path} is truncated inside tensor {entry['name']}")
            values = np.frombuffer(payload[start:start + nbytes], dtype='<f4').copy().reshape(entry['shape'])
            tensors[entry['name']] = torch.from_numpy(values).to(getattr(torch, entry['dtype']))
        return Checkpoint(kind=kind, config=header['config'], step=int(header['step']),
                          tensors=tensors, manifest=header['manifest'])

    @staticmethod
    def restore_model(checkpoint, model):
        expected = model.state_dict()
        stored = {name: t for name, t in checkpoint.tensors.items() if not name.startswith(OPTIM_PREFIX + '/')}
        missing = sorted(set(expected) - set(stored))
        unexpected = sorted(set(stored) - set(expected))
        if missing or unexpected:
            raise CheckpointManifestError(
                f"Checkpoint does not match model: missing {missing[:5]}, unexpected {unexpected[:5]}"
            )
        for name, tensor in stored.items():
            if tuple(tensor.shape) != tuple(expected[name].shape):
                raise CheckpointManifestError(
                    f"Shape mismatch for {name}: checkpoint {tuple(tensor.shape)}, model {tuple(expected[name].shape)}"
                )
        model.load_state_dict(stored)
        return model

    @staticmethod
    def restore_optimizer(checkpoint, opt_name, optimizer, model):
        names = {id(p): name for name, p in model.named_parameters()}
        restored = 0
        for group in optimizer.param_groups:
            for param in group['params']:
                prefix = f"{OPTIM_PREFIX}/{opt_name}/{names[id(param)]}/"
                state = {
                    key[len(prefix):]: tensor.to(param.device)
                    for key, tensor in checkpoint.tensors.items() if key.startswith(prefix)
                }
                if state:
                    if 'step' in state:
                        state['step'] = state['step'].to(torch.float32).cpu()
                    optimizer.state[param] = state
                    restored += 1
        logger.debug(f"Restored optimizer '{opt_name}' state for {restored} parameters.")
        return optimizer
