"""Stateful layers holding named parameters."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from ssrgan.core.tensor import DEFAULT_DTYPE, Tensor, add
from ssrgan.errors import ShapeError
from ssrgan.layers import functional as F


class Module:
    """Minimal container: parameters and buffers are discovered from
    attributes in assignment order, which fixes checkpoint ordering."""

    training = True

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def _children(self) -> Iterator[tuple[str, object]]:
        for key, val in vars(self).items():
            if isinstance(val, (Module, Tensor)):
                yield key, val
            elif isinstance(val, list):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield f"{key}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, val in self._children():
            if isinstance(val, Tensor):
                if val.requires_grad:
                    yield prefix + key, val
            else:
                yield from val.named_parameters(prefix + key + ".")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for key, val in self._children():
            if isinstance(val, Module):
                yield from val.named_buffers(prefix + key + ".")

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, val in self._children():
            if isinstance(val, Module):
                yield from val.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def to(self, dtype) -> "Module":
        """Cast parameters and buffers in place (float64 for gradient checks)."""
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.grad = np.zeros_like(p.data)
        for m in self.modules():
            if isinstance(m, BatchNorm2d):
                m.running_mean = m.running_mean.astype(dtype)
                m.running_var = m.running_var.astype(dtype)
        return self

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def _init_uniform(shape, fan_in: int, rng, dtype, name: str) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    vals = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Tensor(vals, requires_grad=True, name=name)


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                 padding: int = 0, rng=None, dtype=DEFAULT_DTYPE, bias: bool = True):
        if min(in_channels, out_channels, kernel, stride) < 1 or padding < 0:
            raise ShapeError("Conv2d: channels, kernel and stride must be positive, padding >= 0")
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel, self.stride, self.padding = kernel, stride, padding
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel * kernel
        self.weight = _init_uniform((out_channels, in_channels, kernel, kernel), fan_in, rng, dtype, "weight")
        self.bias = _init_uniform((out_channels,), fan_in, rng, dtype, "bias") if bias else None

    def output_size(self, h: int, w: int) -> tuple[int, int]:
        k, s, p = self.kernel, self.stride, self.padding
        return F.conv_output_size(h, k, s, p), F.conv_output_size(w, k, s, p)

    def forward(self, x):
        return F.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class ConvTranspose2d(Module):
    """Weights are stored (in, out, k, k)."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                 padding: int = 0, rng=None, dtype=DEFAULT_DTYPE, bias: bool = True):
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel, self.stride, self.padding = kernel, stride, padding
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel * kernel
        self.weight = _init_uniform((in_channels, out_channels, kernel, kernel), fan_in, rng, dtype, "weight")
        self.bias = _init_uniform((out_channels,), fan_in, rng, dtype, "bias") if bias else None

    def output_size(self, h: int, w: int) -> tuple[int, int]:
        k, s, p = self.kernel, self.stride, self.padding
        return F.transpose_output_size(h, k, s, p), F.transpose_output_size(w, k, s, p)

    def forward(self, x):
        return F.transpose_conv2d(x, self.weight, self.bias, self.stride, self.padding)


class PixelShuffle(Module):
    def __init__(self, r: int = 2):
        if r < 2:
            raise ValueError("upscale factor must be >= 2")
        self.r = r

    def forward(self, x):
        return F.pixel_shuffle(x, self.r)


class BatchNorm2d(Module):
    def __init__(self, channels: int, momentum: float = F.BN_MOMENTUM, eps: float = F.BN_EPS,
                 dtype=DEFAULT_DTYPE):
        self.channels, self.momentum, self.eps = channels, momentum, eps
        self.gamma = Tensor(np.ones(channels, dtype), requires_grad=True, name="gamma")
        self.beta = Tensor(np.zeros(channels, dtype), requires_grad=True, name="beta")
        self.running_mean = np.zeros(channels, dtype)
        self.running_var = np.ones(channels, dtype)

    def named_buffers(self, prefix=""):
        yield prefix + "running_mean", self.running_mean
        yield prefix + "running_var", self.running_var

    def forward(self, x):
        return F.batch_norm2d(x, self.gamma, self.beta, self.running_mean, self.running_var,
                              self.training, self.momentum, self.eps)


class PReLU(Module):
    def __init__(self, init: float = 0.25, dtype=DEFAULT_DTYPE):
        self.slope = Tensor(np.full(1, init, dtype), requires_grad=True, name="slope")

    def forward(self, x):
        return F.prelu(x, self.slope)


class LeakyReLU(Module):
    def __init__(self, negative_slope: float = F.LEAKY_SLOPE):
        self.negative_slope = negative_slope

    def forward(self, x):
        return F.leaky_relu(x, self.negative_slope)


class Tanh(Module):
    def forward(self, x):
        return F.tanh(x)


class Sigmoid(Module):
    def forward(self, x):
        return F.sigmoid(x)


class Identity(Module):
    def forward(self, x):
        return x


class Sequential(Module):
    def __init__(self, *layers: Module):
        self.layers = list(layers)

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, i):
        return self.layers[i]

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


class ResidualBlock(Module):
    """``y = x + F(x)``, F = conv3 -> BN -> PReLU -> conv3 -> BN."""

    def __init__(self, channels: int, rng=None, dtype=DEFAULT_DTYPE, use_bn: bool = True):
        self.channels = channels
        norm = (lambda: BatchNorm2d(channels, dtype=dtype)) if use_bn else Identity
        self.body = Sequential(
            Conv2d(channels, channels, 3, 1, 1, rng=rng, dtype=dtype),
            norm(),
            PReLU(dtype=dtype),
            Conv2d(channels, channels, 3, 1, 1, rng=rng, dtype=dtype),
            norm(),
        )

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"ResidualBlock: expected {self.channels} channels, got {x.shape}")
        return add(x, self.body(x))


def residual_block(block: ResidualBlock, x: Tensor) -> Tensor:
    return block(x)
