"""Normalized mean squared error."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ssrgan.errors import EmptyInputError, ShapeError, UndefinedReferenceError


@dataclass
class NmseResult:
    per_image: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.per_image)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_image))


def nmse(h, h_hat) -> float:
    """``||h - h_hat||_F^2 / ||h||_F^2`` accumulated in float64."""
    h = np.asarray(h, dtype=np.float64)
    h_hat = np.asarray(h_hat, dtype=np.float64)
    if h.shape != h_hat.shape:
        raise ShapeError(f"nmse: shape mismatch {h.shape} vs {h_hat.shape}")
    ref = float(np.sum(h * h))
    if ref == 0.0:
        raise UndefinedReferenceError("nmse: reference image has zero norm")
    d = h - h_hat
    return float(np.sum(d * d)) / ref


def nmse_dataset(pairs: Iterable) -> NmseResult:
    """Per-image NMSE and their unweighted mean (mean of ratios)."""
    per_image = [nmse(h, h_hat) for h, h_hat in pairs]
    if not per_image:
        raise EmptyInputError("nmse_dataset: no image pairs")
    return NmseResult(per_image)
