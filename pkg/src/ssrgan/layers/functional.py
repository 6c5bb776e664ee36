"""Differentiable layer primitives on NCHW tensors.

Convolutions are lowered to a single matrix product over an im2col buffer;
the buffer is kept on the graph for the weight gradient. The transposed
convolution is implemented as the exact adjoint of :func:`conv2d`, so its
forward is a col2im scatter and its input gradient an im2col gather.
"""

from __future__ import annotations

import numpy as np

from ssrgan.core.gradcheck import record_kink
from ssrgan.core.tensor import Tensor, _wrap
from ssrgan.errors import DegenerateBatchError, ShapeError

LEAKY_SLOPE = 0.2
BN_EPS = 1e-5
BN_MOMENTUM = 0.9


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def transpose_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size - 1) * stride + kernel - 2 * padding


def _im2col(xp: np.ndarray, k: int, s: int, ho: int, wo: int) -> np.ndarray:
    """(N, C, Hp, Wp) -> (C*k*k, N*Ho*Wo) patch matrix, channel-major."""
    n, c = xp.shape[:2]
    xc = xp.transpose(1, 0, 2, 3)
    cols = np.empty((c, k, k, n, ho, wo), dtype=xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xc[:, :, i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s]
    return cols.reshape(c * k * k, n * ho * wo)


def _col2im(cols: np.ndarray, n: int, c: int, hp: int, wp: int,
            k: int, s: int, ho: int, wo: int) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter-add patches into (N, C, Hp, Wp)."""
    out = np.zeros((c, n, hp, wp), dtype=cols.dtype)
    patches = cols.reshape(c, k, k, n, ho, wo)
    for i in range(k):
        for j in range(k):
            out[:, :, i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s] += patches[:, i, j]
    return out.transpose(1, 0, 2, 3)


def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def _check_nchw(x: Tensor, channels: int, op: str):
    if x.ndim != 4:
        raise ShapeError(f"{op}: expected NCHW input, got shape {x.shape}")
    if x.shape[1] != channels:
        raise ShapeError(f"{op}: input has {x.shape[1]} channels, layer expects {channels}")


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1,
           padding: int = 0) -> Tensor:
    """Cross-correlation; ``weight`` is (out, in, k, k)."""
    o, c, k, k2 = weight.shape
    if k != k2:
        raise ShapeError(f"conv2d: square kernels only, got {weight.shape}")
    _check_nchw(x, c, "conv2d")
    n, _, h, w = x.shape
    ho, wo = conv_output_size(h, k, stride, padding), conv_output_size(w, k, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: input {h}x{w} collapses to {ho}x{wo} "
                         f"(k={k}, s={stride}, p={padding})")
    xp = _pad(x.data, padding)
    cols = _im2col(xp, k, stride, ho, wo)
    wmat = weight.data.reshape(o, c * k * k)
    out = wmat @ cols
    if bias is not None:
        out += bias.data[:, None]
    out = np.ascontiguousarray(out.reshape(o, n, ho, wo).transpose(1, 0, 2, 3))

    def bw(g):
        g2 = np.ascontiguousarray(g.transpose(1, 0, 2, 3)).reshape(o, n * ho * wo)
        gw = (g2 @ cols.T).reshape(weight.shape) if weight.requires_grad else None
        gb = g2.sum(axis=1) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            gxp = _col2im(wmat.T @ g2, n, c, xp.shape[2], xp.shape[3], k, stride, ho, wo)
            gx = gxp[:, :, padding:padding + h, padding:padding + w] if padding else gxp
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _wrap(out, parents, bw, "conv2d")


def transpose_conv2d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1,
                     padding: int = 0) -> Tensor:
    """Transposed convolution; ``weight`` is (in, out, k, k).

    With zero bias this is the adjoint of ``conv2d`` using the same weight
    array read as (out, in, k, k) of the forward convolution.
    """
    c, o, k, _ = weight.shape
    _check_nchw(x, c, "transpose_conv2d")
    n, _, h, w = x.shape
    hf, wf = (h - 1) * stride + k, (w - 1) * stride + k
    ho, wo = hf - 2 * padding, wf - 2 * padding
    if ho < 1 or wo < 1:
        raise ShapeError(f"transpose_conv2d: output collapses to {ho}x{wo}")
    x2 = np.ascontiguousarray(x.data.transpose(1, 0, 2, 3)).reshape(c, n * h * w)
    wmat = weight.data.reshape(c, o * k * k)
    full = _col2im(wmat.T @ x2, n, o, hf, wf, k, stride, h, w)
    out = full[:, :, padding:padding + ho, padding:padding + wo]
    if bias is not None:
        out = out + bias.data.reshape(1, o, 1, 1)
    out = np.ascontiguousarray(out)

    def bw(g):
        gp = _pad(g, padding)
        gcols = _im2col(gp, k, stride, h, w)
        gx = None
        if x.requires_grad:
            gx = np.ascontiguousarray((wmat @ gcols).reshape(c, n, h, w).transpose(1, 0, 2, 3))
        gw = (x2 @ gcols.T).reshape(weight.shape) if weight.requires_grad else None
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _wrap(out, parents, bw, "transpose_conv2d")


def _shuffle(a: np.ndarray, r: int) -> np.ndarray:
    n, cr, h, w = a.shape
    c = cr // (r * r)
    return np.ascontiguousarray(
        a.reshape(n, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(n, c, h * r, w * r))


def _unshuffle(a: np.ndarray, r: int) -> np.ndarray:
    n, c, hr, wr = a.shape
    h, w = hr // r, wr // r
    return np.ascontiguousarray(
        a.reshape(n, c, h, r, w, r).transpose(0, 1, 3, 5, 2, 4).reshape(n, c * r * r, h, w))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """(N, C*r*r, H, W) -> (N, C, rH, rW) with
    ``out[n, c, h*r+i, w*r+j] = x[n, c*r*r + i*r + j, h, w]``."""
    if x.ndim != 4 or x.shape[1] % (r * r):
        raise ShapeError(f"pixel_shuffle: channels of {x.shape} not divisible by r^2={r * r}")
    return _wrap(_shuffle(x.data, r), (x,), lambda g: (_unshuffle(g, r),), "pixel_shuffle")


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    if x.ndim != 4 or x.shape[2] % r or x.shape[3] % r:
        raise ShapeError(f"pixel_unshuffle: spatial extents of {x.shape} not divisible by {r}")
    return _wrap(_unshuffle(x.data, r), (x,), lambda g: (_shuffle(g, r),), "pixel_unshuffle")


def batch_norm2d(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray,
                 running_var: np.ndarray, training: bool, momentum: float = BN_MOMENTUM,
                 eps: float = BN_EPS) -> Tensor:
    """Per-channel normalization over (N, H, W).

    In training mode the batch statistics are used (biased variance) and the
    running buffers are updated in place as
    ``running = momentum * running + (1 - momentum) * batch`` with the
    unbiased batch variance. Eval mode reads the running buffers.
    """
    c = gamma.shape[0]
    _check_nchw(x, c, "batch_norm2d")
    n, _, h, w = x.shape
    m = n * h * w
    dt = x.dtype.type
    shape = (1, c, 1, 1)
    if training:
        if m < 2:
            raise DegenerateBatchError(f"batch_norm2d: {m} element per channel in train mode")
        mean = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1 - momentum) * mean
        running_var *= momentum
        running_var += (1 - momentum) * var * (m / (m - 1))
    else:
        mean, var = running_mean.astype(x.dtype), running_var.astype(x.dtype)
    invstd = (1.0 / np.sqrt(var + dt(eps))).astype(x.dtype)
    xhat = (x.data - mean.reshape(shape)) * invstd.reshape(shape)
    out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

    def bw(g):
        ggamma = (g * xhat).sum(axis=(0, 2, 3))
        gbeta = g.sum(axis=(0, 2, 3))
        gxhat = g * gamma.data.reshape(shape)
        if training:
            gx = (invstd.reshape(shape) / m) * (
                m * gxhat
                - gxhat.sum(axis=(0, 2, 3)).reshape(shape)
                - xhat * (gxhat * xhat).sum(axis=(0, 2, 3)).reshape(shape))
        else:
            gx = gxhat * invstd.reshape(shape)
        return gx.astype(x.dtype, copy=False), ggamma, gbeta

    return _wrap(out, (x, gamma, beta), bw, "batch_norm2d")


# -- activations -------------------------------------------------------
# Subgradient at the kink is the negative-side slope (ReLU part contributes 0).

def prelu(x: Tensor, slope: Tensor) -> Tensor:
    """Parametric ReLU with one learnable slope (shape (1,)) for the layer."""
    a = slope.data.reshape(())
    pos = x.data > 0
    record_kink(pos)
    out = np.where(pos, x.data, a * x.data)

    def bw(g):
        gx = np.where(pos, g, a * g)
        ga = np.asarray([np.sum(np.where(pos, 0, x.data * g))], dtype=slope.dtype)
        return gx, ga

    return _wrap(out, (x, slope), bw, "prelu")


def leaky_relu(x: Tensor, negative_slope: float = LEAKY_SLOPE) -> Tensor:
    a = x.dtype.type(negative_slope)
    pos = x.data > 0
    record_kink(pos)
    return _wrap(np.where(pos, x.data, a * x.data), (x,),
                 lambda g: (np.where(pos, g, a * g),), "leaky_relu")


def relu(x: Tensor) -> Tensor:
    return leaky_relu(x, 0.0)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _wrap(y, (x,), lambda g: (g * (1 - y * y),), "tanh")


def sigmoid(x: Tensor) -> Tensor:
    half = x.dtype.type(0.5)
    y = half * (np.tanh(half * x.data) + 1)
    return _wrap(y, (x,), lambda g: (g * y * (1 - y),), "sigmoid")


def activation(kind: str, x: Tensor, slope: Tensor | None = None) -> Tensor:
    if kind == "prelu":
        if slope is None:
            raise ValueError("prelu needs a slope parameter")
        return prelu(x, slope)
    if kind == "leaky_relu":
        return leaky_relu(x)
    if kind == "tanh":
        return tanh(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {kind!r}")
