r"""
Hinge adversarial losses, averaged over discriminator scales.

:math:`L_D = \text{mean}(\max(0, 1 - D(x_r))) + \text{mean}(\max(0, 1 + D(x_f)))`

:math:`L_G = -\text{mean}(D(x_f))`
"""
import torch
import torch.nn.functional as F


def _per_scale(logits):
    if isinstance(logits, torch.Tensor):
        return [logits]
    return list(logits)


def gan_loss_d(real_logits, fake_logits):
    real_logits, fake_logits = _per_scale(real_logits), _per_scale(fake_logits)
    if len(real_logits) != len(fake_logits):
        raise ValueError(f"Got {len(real_logits)} real and {len(fake_logits)} fake scales")
    losses = [
        F.relu(1 - real).mean() + F.relu(1 + fake).mean()
        for real, fake in zip(real_logits, fake_logits)
    ]
    return torch.stack(losses).mean()


def gan_loss_g(fake_logits):
    return torch.stack([-fake.mean() for fake in _per_scale(fake_logits)]).mean()
