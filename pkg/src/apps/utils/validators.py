from dataclasses import fields

from src.apps.models.config_model import STAGES, ModelConfig, TrainConfig
from src.apps.models.dataset_model import DatasetConfig
from src.apps.models.loss_model import LossWeights

L1_REDUCTIONS = ('mean', 'sum')


def _unknown_keys(data, cls, prefix=''):
    known = {f.name for f in fields(cls)}
    return [f"Unknown config key '{prefix}{key}'." for key in data if key not in known]


def _positive(data, keys, errors, allow_zero=False):
    for key in keys:
        if key not in data:
            continue
        value = data[key]
        if not _is_number(value):
            errors.append(f"'{key}' must be a number.")
        elif value < 0 or (value == 0 and not allow_zero):
            errors.append(f"'{key}' must be {'non-negative' if allow_zero else 'positive'}.")


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _fraction(data, key, errors):
    value = data.get(key)
    if value is not None and (not _is_number(value) or not 0 <= value <= 1):
        errors.append(f"'{key}' must lie in [0, 1].")


def _typed(data, keys, kind, label, errors):
    for key in keys:
        if data.get(key) is not None and not isinstance(data[key], kind):
            errors.append(f"'{key}' must be {label}.")


def _widths(data, keys, errors):
    for key in keys:
        if key not in data:
            continue
        value = data[key]
        if not isinstance(value, (list, tuple)) or not value or not all(
            isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value
        ):
            errors.append(f"'{key}' must be a non-empty list of positive integers.")


def validate_dataset_config(data):
    """
    Validates a synth-data config payload (DatasetConfig field names).
    Returns:
        list: error messages, empty if the payload is valid.
    """
    if not isinstance(data, dict):
        return ["Dataset config must be a JSON object."]
    errors = _unknown_keys(data, DatasetConfig)
    _positive(data, ('persons', 'images_per_person', 'resolution', 'workers'), errors)
    _positive(data, ('seed', 'val_persons', 'test_persons'), errors, allow_zero=True)
    for key in ('labeled_fraction', 'val_fraction', 'test_fraction'):
        _fraction(data, key, errors)

    resolution = data.get('resolution', DatasetConfig.resolution)
    if _is_number(resolution) and resolution > 0 and (resolution < 32 or resolution % 16):
        errors.append("'resolution' must be at least 32 and divisible by 16.")
    _typed(data, ('root',), str, 'a string', errors)
    fractions = [data.get('val_fraction', 0), data.get('test_fraction', 0)]
    if all(_is_number(f) for f in fractions) and sum(fractions) > 1:
        errors.append("'val_fraction' and 'test_fraction' together cannot exceed 1.")
    persons = data.get('persons', DatasetConfig.persons)
    counts = [data.get('val_persons', 0), data.get('test_persons', 0)]
    held_out = sum(counts) if all(_is_number(c) for c in counts) else None
    if _is_number(persons) and _is_number(held_out) and held_out >= persons:
        errors.append("At least one person must remain for training after val/test persons are held out.")
    return errors


def validate_train_config(data):
    """
    Validates a train config payload (TrainConfig field names, nested `model` and `loss_weights`).
    Returns:
        list: error messages, empty if the payload is valid.
    """
    if not isinstance(data, dict):
        return ["Train config must be a JSON object."]
    errors = _unknown_keys(data, TrainConfig)
    if 'stage' in data and data['stage'] not in STAGES:
        errors.append(f"'stage' must be one of {', '.join(STAGES)}.")
    _positive(data, ('resolution', 'batch_size', 'steps', 'k_style_images', 'style_pool_top_n',
                     'lr_g', 'lr_d', 'lr'), errors)
    _positive(data, ('seed', 'checkpoint_every', 'log_every'), errors, allow_zero=True)
    for key in ('betas_adversarial', 'betas'):
        betas = data.get(key)
        if betas is not None and (
            not isinstance(betas, (list, tuple)) or len(betas) != 2
            or not all(_is_number(b) and 0 <= b < 1 for b in betas)
        ):
            errors.append(f"'{key}' must be two values in [0, 1).")
    _typed(data, ('dataset_root', 'out_dir', 'metrics_log', 'segmenter_checkpoint', 'rankings'), str, 'a string', errors)
    _typed(data, ('verify_step_isolation',), bool, 'true or false', errors)
    if 'l1_reduction' in data and data['l1_reduction'] not in L1_REDUCTIONS:
        errors.append(f"'l1_reduction' must be one of {', '.join(L1_REDUCTIONS)}.")

    weights = data.get('loss_weights')
    if weights is not None:
        if not isinstance(weights, dict):
            errors.append("'loss_weights' must be an object.")
        else:
            errors.extend(_unknown_keys(weights, LossWeights, 'loss_weights.'))
            _positive(weights, list(weights), errors, allow_zero=True)

    model = data.get('model')
    if model is not None:
        if not isinstance(model, dict):
            errors.append("'model' must be an object.")
        else:
            errors.extend(_unknown_keys(model, ModelConfig, 'model.'))
            _positive(model, ('style_dim', 'spade_hidden', 'disc_scales', 'disc_layers', 'disc_base_width'), errors)
            _widths(model, ('generator_widths', 'encoder_widths', 'unet_widths'), errors)
            _typed(model, ('spectral', 'style_injection', 'zero_init_residual'), bool, 'true or false', errors)
    return errors
