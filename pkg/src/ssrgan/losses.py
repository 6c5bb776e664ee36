"""Discriminator and generator objectives.

Both players are scored with mean squared error. The discriminator is pushed
towards smoothed "real" targets ``1 - 0.1*alpha`` (alpha uniform on [0, 1))
on clean images and towards 0 on reconstructions; the generator pays an MSE
content term plus a 1e-3 weighted pull of the discriminator's verdict
towards 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from ssrgan.core.tensor import Tensor, add, mse, scalar_mul
from ssrgan.errors import ShapeError

ADV_WEIGHT = 1e-3
SMOOTHING = 0.1


@dataclass
class LossReport:
    loss_D: float
    loss_F: float
    loss_R: float
    loss_G: float
    loss_G_content: float
    loss_G_adv: float

    def as_dict(self) -> dict:
        return asdict(self)

    def finite(self) -> bool:
        return all(np.isfinite(v) for v in asdict(self).values())


class DiscriminatorLoss(NamedTuple):
    total: Tensor
    real: Tensor
    fake: Tensor


class GeneratorLoss(NamedTuple):
    total: Tensor
    content: Tensor
    adversarial: Tensor


def targets_from_alpha(alpha: np.ndarray) -> np.ndarray:
    return 1 - alpha.dtype.type(SMOOTHING) * alpha


def real_targets(h: int, w: int, rng: np.random.Generator, n: int | None = None,
                 dtype=np.float32) -> np.ndarray:
    """Label-smoothed real targets: (1, h, w), or (n, 1, h, w) with one alpha per sample.

    Values lie in (0.9, 1.0].
    """
    shape = (1, h, w) if n is None else (n, 1, h, w)
    alpha = rng.random(shape, dtype=np.float64)
    t = targets_from_alpha(alpha).astype(dtype)
    # float32 rounding may land on 0.9 itself; keep the open lower bound
    return np.maximum(t, np.nextafter(dtype(1 - SMOOTHING), dtype(1)))


def discriminator_loss(d_real: Tensor, d_fake: Tensor, targets_real) -> DiscriminatorLoss:
    """``MSE(d_real, targets) + MSE(d_fake, 0)``.

    ``d_fake`` should come from a detached reconstruction so that only the
    discriminator receives gradients.
    """
    if d_real.shape != d_fake.shape:
        raise ShapeError(f"discriminator_loss: d_real {d_real.shape} vs d_fake {d_fake.shape}")
    targets = targets_real if isinstance(targets_real, Tensor) else Tensor(np.asarray(targets_real, dtype=d_real.dtype))
    loss_r = mse(d_real, targets)
    loss_f = mse(d_fake, Tensor(np.zeros_like(d_fake.data)))
    return DiscriminatorLoss(add(loss_f, loss_r), loss_r, loss_f)


def generator_loss(h_hat: Tensor, h: Tensor, d_fake: Tensor,
                   adv_weight: float = ADV_WEIGHT) -> GeneratorLoss:
    """``MSE(h_hat, h) + adv_weight * MSE(d_fake, 1)``."""
    content = mse(h_hat, h)
    adv = mse(d_fake, Tensor(np.ones_like(d_fake.data)))
    return GeneratorLoss(add(content, scalar_mul(adv, adv_weight)), content, adv)
