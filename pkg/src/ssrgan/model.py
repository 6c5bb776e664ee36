"""SSRGAN generator and discriminator.

Generator (default widths)::

    conv 3->64 k9 s1 p4, PReLU
    6 x residual block (64)
    conv 64->64 k3 s1 p1, BN, + skip from trunk entry
    2 x [conv 64->256 k3 s1 p1, pixel shuffle r=2, PReLU]     (x4 spatial)
    conv 64->3 k9 s4 p4, tanh                                   (/4 spatial)

so an H x W input comes back at H x W. The discriminator maps an image to
an H x W map of probabilities::

    conv 3->64 s2, LReLU
    conv 64->128 s2, BN, LReLU
    conv 128->256 s1, BN, LReLU
    conv 256->512 s1, BN, LReLU
    transpose conv 512->1 k4 s4 p0, sigmoid

The default generator has 808,332 trainable parameters.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ssrgan.core.tensor import DEFAULT_DTYPE, Tensor, add, no_grad
from ssrgan.errors import ConfigError, ShapeError
from ssrgan.layers.modules import (
    BatchNorm2d, Conv2d, ConvTranspose2d, Identity, LeakyReLU, Module, PixelShuffle, PReLU,
    ResidualBlock, Sequential, Sigmoid, Tanh,
)

MIN_SIZE = 8


@dataclass
class GeneratorConfig:
    channels: int = 3
    width: int = 64
    n_blocks: int = 6
    n_shuffle: int = 2
    use_bn: bool = True

    def validate(self):
        if self.channels < 1 or self.width < 1:
            raise ConfigError("generator channels and width must be positive")
        if self.n_blocks < 1:
            raise ConfigError(f"generator needs at least one residual block, got {self.n_blocks}")
        if self.n_shuffle not in (1, 2):
            raise ConfigError(f"n_shuffle must be 1 or 2, got {self.n_shuffle}")

    @property
    def tail_stride(self) -> int:
        return 2 ** self.n_shuffle


@dataclass
class DiscriminatorConfig:
    channels: int = 3
    ladder: tuple = (64, 128, 256, 512)
    strides: tuple = (2, 2, 1, 1)
    use_bn: bool = True

    def validate(self):
        if len(self.ladder) != len(self.strides) or not self.ladder:
            raise ConfigError("discriminator ladder and strides must be non-empty and equal length")
        if any(c < 1 for c in self.ladder) or any(s < 1 for s in self.strides):
            raise ConfigError("discriminator channels and strides must be positive")
        down = int(np.prod(self.strides))
        if down != 4:
            raise ConfigError(f"block strides must downsample by exactly 4 to match the "
                              f"k4/s4 head, got {down}")


def check_input_size(h: int, w: int):
    for name, v in (("height", h), ("width", w)):
        if v < MIN_SIZE or v % 4:
            raise ConfigError(f"image {name} {v} must be a multiple of 4 and >= {MIN_SIZE}")


class Generator(Module):
    def __init__(self, cfg: GeneratorConfig, rng, dtype=DEFAULT_DTYPE):
        cfg.validate()
        self.cfg = cfg
        c, f = cfg.channels, cfg.width
        self.head = Sequential(Conv2d(c, f, 9, 1, 4, rng=rng, dtype=dtype), PReLU(dtype=dtype))
        self.blocks = Sequential(*[ResidualBlock(f, rng=rng, dtype=dtype, use_bn=cfg.use_bn)
                                   for _ in range(cfg.n_blocks)])
        self.trunk_out = Sequential(
            Conv2d(f, f, 3, 1, 1, rng=rng, dtype=dtype),
            BatchNorm2d(f, dtype=dtype) if cfg.use_bn else Identity())
        self.upsample = Sequential(*[
            Sequential(Conv2d(f, f * 4, 3, 1, 1, rng=rng, dtype=dtype), PixelShuffle(2), PReLU(dtype=dtype))
            for _ in range(cfg.n_shuffle)])
        self.tail = Sequential(Conv2d(f, c, 9, cfg.tail_stride, 4, rng=rng, dtype=dtype), Tanh())

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.cfg.channels:
            raise ShapeError(f"generator expects (N, {self.cfg.channels}, H, W), got {x.shape}")
        check_input_size(x.shape[2], x.shape[3])
        h = self.head(x)
        t = add(h, self.trunk_out(self.blocks(h)))
        return self.tail(self.upsample(t))


class Discriminator(Module):
    def __init__(self, cfg: DiscriminatorConfig, rng, dtype=DEFAULT_DTYPE):
        cfg.validate()
        self.cfg = cfg
        blocks, prev = [], cfg.channels
        for i, (ch, s) in enumerate(zip(cfg.ladder, cfg.strides)):
            layers = [Conv2d(prev, ch, 3, s, 1, rng=rng, dtype=dtype)]
            if i > 0 and cfg.use_bn:
                layers.append(BatchNorm2d(ch, dtype=dtype))
            layers.append(LeakyReLU())
            blocks.append(Sequential(*layers))
            prev = ch
        self.blocks = Sequential(*blocks)
        self.head = Sequential(ConvTranspose2d(prev, 1, 4, 4, 0, rng=rng, dtype=dtype), Sigmoid())

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.cfg.channels:
            raise ShapeError(f"discriminator expects (N, {self.cfg.channels}, H, W), got {x.shape}")
        check_input_size(x.shape[2], x.shape[3])
        return self.head(self.blocks(x))


def build_generator(cfg: GeneratorConfig | None = None, rng=None, dtype=DEFAULT_DTYPE) -> Generator:
    return Generator(cfg or GeneratorConfig(), rng if rng is not None else np.random.default_rng(0), dtype)


def build_discriminator(cfg: DiscriminatorConfig | None = None, rng=None,
                        dtype=DEFAULT_DTYPE) -> Discriminator:
    return Discriminator(cfg or DiscriminatorConfig(), rng if rng is not None else np.random.default_rng(0), dtype)


def forward(net: Module, x: Tensor, mode: str = "eval") -> Tensor:
    """Run ``net`` in ``train`` or ``eval`` mode; eval runs without a graph."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    net.train(mode == "train")
    if mode == "eval":
        with no_grad():
            return net(x)
    return net(x)
