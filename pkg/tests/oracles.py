"""Slow, obviously-correct reference implementations used by the tests."""

import numpy as np


def conv2d_direct(x, w, b, stride, pad):
    n, c, h, wd = x.shape
    o, _, k, _ = w.shape
    xp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    out = np.zeros((n, o, ho, wo))
    for ni in range(n):
        for oi in range(o):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0 if b is None else float(b[oi])
                    for ci in range(c):
                        for u in range(k):
                            for v in range(k):
                                acc += xp[ni, ci, i * stride + u, j * stride + v] * w[oi, ci, u, v]
                    out[ni, oi, i, j] = acc
    return out


def transpose_conv2d_direct(x, w, b, stride, pad):
    """Scatter form: every input pixel stamps a weighted kernel onto the output."""
    n, c, h, wd = x.shape
    _, o, k, _ = w.shape
    hf, wf = (h - 1) * stride + k, (wd - 1) * stride + k
    full = np.zeros((n, o, hf, wf))
    for ni in range(n):
        for ci in range(c):
            for i in range(h):
                for j in range(wd):
                    for oi in range(o):
                        full[ni, oi, i * stride:i * stride + k, j * stride:j * stride + k] += x[ni, ci, i, j] * w[ci, oi]
    out = full[:, :, pad:hf - pad, pad:wf - pad]
    if b is not None:
        out = out + np.asarray(b).reshape(1, -1, 1, 1)
    return out


def conv_params(cin, cout, k, bias=True):
    return cin * cout * k * k + (cout if bias else 0)


def generator_param_tally(channels=3, width=64, n_blocks=6, n_shuffle=2, use_bn=True):
    bn = 2 * width if use_bn else 0
    total = conv_params(channels, width, 9) + 1                       # head conv + PReLU
    total += n_blocks * (2 * conv_params(width, width, 3) + 2 * bn + 1)  # residual blocks
    total += conv_params(width, width, 3) + bn                        # trunk exit
    total += n_shuffle * (conv_params(width, 4 * width, 3) + 1)        # upsampling stages
    total += conv_params(width, channels, 9)                          # tail
    return total


def discriminator_param_tally(channels=3, ladder=(64, 128, 256, 512), use_bn=True):
    total, prev = 0, channels
    for i, ch in enumerate(ladder):
        total += conv_params(prev, ch, 3) + (2 * ch if use_bn and i > 0 else 0)
        prev = ch
    return total + conv_params(prev, 1, 4)


def random_conv_cases(seed, count=50):
    """Yield (x, w, b, stride, pad) float64 draws with valid output extents."""
    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        n, c, o = rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4)
        k, s, p = int(rng.choice([1, 2, 3, 4, 5])), int(rng.integers(1, 4)), int(rng.integers(0, 3))
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        if h + 2 * p < k or w + 2 * p < k:
            continue
        made += 1
        yield (rng.standard_normal((n, c, h, w)), rng.standard_normal((o, c, k, k)),
               rng.standard_normal(o), s, p)


def random_tconv_cases(seed, count=50):
    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        n, c, o = rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4)
        k, s = int(rng.choice([1, 2, 3, 4])), int(rng.integers(1, 5))
        p = int(rng.integers(0, k))
        h, w = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        if (h - 1) * s + k - 2 * p < 1 or (w - 1) * s + k - 2 * p < 1:
            continue
        made += 1
        yield (rng.standard_normal((n, c, h, w)), rng.standard_normal((c, o, k, k)),
               rng.standard_normal(o), s, p)
