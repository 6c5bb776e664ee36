"""Random uniform pixel corruption.

A mask of level ``p`` marks exactly ``floor(p * H * W)`` spatial sites,
chosen as the first entries of a seeded uniform permutation of all sites.
Because the permutation depends only on the seed, masks drawn from the same
seed at increasing levels are nested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ssrgan.core.rng import as_rng
from ssrgan.errors import RangeError, ShapeError

FILL_VALUE = -1.0  # black in [-1, 1] space


@dataclass(frozen=True)
class CorruptionMask:
    height: int
    width: int
    level: float
    plane: np.ndarray  # bool (H, W), True = corrupted
    seed: int | None = None

    @property
    def count(self) -> int:
        return int(self.plane.sum())


def corrupted_count(h: int, w: int, p: float) -> int:
    # round before flooring so that e.g. 0.29 * 100 counts 29, not 28
    return int(math.floor(round(p * h * w, 9)))


def make_mask(h: int, w: int, p: float, rng) -> CorruptionMask:
    """Select ``floor(p*h*w)`` sites uniformly without replacement.

    ``rng`` is a numpy Generator or an integer seed.
    """
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"corruption level must lie in [0, 1], got {p}")
    if h < 1 or w < 1:
        raise ShapeError(f"mask extents must be positive, got {h}x{w}")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    order = as_rng(rng).permutation(h * w)
    plane = np.zeros(h * w, dtype=bool)
    plane[order[:corrupted_count(h, w, p)]] = True
    return CorruptionMask(h, w, float(p), plane.reshape(h, w), seed)


def apply_mask(img: np.ndarray, mask: CorruptionMask, fill: float = FILL_VALUE) -> np.ndarray:
    """Set every channel of each masked site of a (C, H, W) image to ``fill``."""
    if img.ndim != 3 or img.shape[1:] != mask.plane.shape:
        raise ShapeError(f"image {img.shape} does not match mask {mask.plane.shape}")
    out = img.copy()
    out[:, mask.plane] = fill
    return out


def corrupt_batch(batch: np.ndarray, masks, fill: float = FILL_VALUE) -> np.ndarray:
    """Apply one mask per image of an (N, C, H, W) batch."""
    if len(masks) != batch.shape[0]:
        raise ShapeError(f"{len(masks)} masks for a batch of {batch.shape[0]}")
    return np.stack([apply_mask(img, m, fill) for img, m in zip(batch, masks)])
