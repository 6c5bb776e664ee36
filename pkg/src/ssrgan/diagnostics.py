"""Finite-difference gradient suite over every layer, both losses and a tiny GAN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ssrgan.core.gradcheck import KinkCrossing, check_directional, check_elementwise, combined_error
from ssrgan.core.rng import derive_seed, make_rng
from ssrgan.core.tensor import Tensor, mul, sum_all
from ssrgan.layers import functional as F
from ssrgan.layers.modules import ResidualBlock
from ssrgan.losses import discriminator_loss, generator_loss
from ssrgan.model import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig

LAYER_TOL = 1e-6
MODEL_TOL = 1e-5
MAX_DRAWS = 25


@dataclass
class SuiteResult:
    component: str
    instance: int
    rel_error: float
    tol: float
    draws: int = 1  # test points drawn; earlier ones straddled an activation kink

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tol


def _param(rng, *shape, scale=1.0):
    return Tensor(scale * rng.standard_normal(shape), requires_grad=True, dtype=np.float64)


def _projected(out_fn, rng):
    """Scalar ``sum(out * R)`` for a fixed random R so every output matters."""
    probe = {}

    def loss():
        out = out_fn()
        if "r" not in probe:
            probe["r"] = Tensor(rng.standard_normal(out.shape), dtype=np.float64)
        return sum_all(mul(out, probe["r"]))

    return loss


def _conv_case(rng):
    s, p = int(rng.integers(1, 3)), int(rng.integers(0, 2))
    x, w, b = _param(rng, 2, 3, 6, 6), _param(rng, 4, 3, 3, 3), _param(rng, 4)
    return _projected(lambda: F.conv2d(x, w, b, s, p), rng), [x, w, b]


def _tconv_case(rng):
    s, p = int(rng.choice([1, 2, 4])), int(rng.integers(0, 2))
    x, w, b = _param(rng, 2, 3, 3, 3), _param(rng, 3, 2, 4, 4), _param(rng, 2)
    return _projected(lambda: F.transpose_conv2d(x, w, b, s, p), rng), [x, w, b]


def _shuffle_case(rng):
    x = _param(rng, 2, 8, 3, 3)
    return _projected(lambda: F.pixel_shuffle(x, 2), rng), [x]


def _bn_case(rng, training):
    x = _param(rng, 4, 3, 3, 3, scale=2.0)
    gamma, beta = _param(rng, 3), _param(rng, 3)
    rm, rv = rng.standard_normal(3), rng.uniform(0.5, 2.0, 3)

    def out():
        return F.batch_norm2d(x, gamma, beta, rm.copy(), rv.copy(), training)

    return _projected(out, rng), [x, gamma, beta]


def _act_case(kind):
    def case(rng):
        x = _param(rng, 2, 3, 4, 4)
        if kind == "prelu":
            a = Tensor(rng.uniform(0.05, 0.5, 1), requires_grad=True, dtype=np.float64)
            return _projected(lambda: F.prelu(x, a), rng), [x, a]
        return _projected(lambda: F.activation(kind, x), rng), [x]
    return case


def _residual_case(rng):
    block = ResidualBlock(4, rng=rng, dtype=np.float64)
    x = _param(rng, 2, 4, 5, 5)
    return _projected(lambda: block(x), rng), [x] + block.parameters()


def _dloss_case(rng):
    shape = (2, 1, 4, 4)
    d_real = Tensor(rng.uniform(0, 1, shape), requires_grad=True, dtype=np.float64)
    d_fake = Tensor(rng.uniform(0, 1, shape), requires_grad=True, dtype=np.float64)
    targets = Tensor(1 - 0.1 * rng.uniform(0, 1, shape), dtype=np.float64)
    return (lambda: discriminator_loss(d_real, d_fake, targets).total), [d_real, d_fake]


def _gloss_case(rng):
    h_hat = Tensor(rng.uniform(-1, 1, (2, 3, 4, 4)), requires_grad=True, dtype=np.float64)
    h = Tensor(rng.uniform(-1, 1, (2, 3, 4, 4)), dtype=np.float64)
    d_fake = Tensor(rng.uniform(0, 1, (2, 1, 4, 4)), requires_grad=True, dtype=np.float64)
    return (lambda: generator_loss(h_hat, h, d_fake).total), [h_hat, d_fake]


LAYER_CASES = {
    "conv2d": _conv_case,
    "transpose_conv2d": _tconv_case,
    "pixel_shuffle": _shuffle_case,
    "batch_norm_train": lambda rng: _bn_case(rng, True),
    "batch_norm_eval": lambda rng: _bn_case(rng, False),
    "prelu": _act_case("prelu"),
    "leaky_relu": _act_case("leaky_relu"),
    "tanh": _act_case("tanh"),
    "sigmoid": _act_case("sigmoid"),
    "residual_block": _residual_case,
    "discriminator_loss": _dloss_case,
    "generator_loss": _gloss_case,
}


def tiny_gan(rng):
    g = Generator(GeneratorConfig(3, 4, 1, 2, True), rng, dtype=np.float64)
    d = Discriminator(DiscriminatorConfig(3, (4, 8, 8, 8), (2, 2, 1, 1), True), rng, dtype=np.float64)
    return g, d


def end_to_end_losses(rng):
    """Loss closures of a tiny generator/discriminator pair on 8x8 images."""
    g, d = tiny_gan(rng)
    x = Tensor(rng.uniform(-1, 1, (2, 3, 8, 8)), dtype=np.float64)
    h = Tensor(rng.uniform(-1, 1, (2, 3, 8, 8)), dtype=np.float64)
    targets = Tensor(1 - 0.1 * rng.uniform(0, 1, (2, 1, 8, 8)), dtype=np.float64)

    def loss_g():
        h_hat = g(x)
        return generator_loss(h_hat, h, d(h_hat)).total

    def loss_d():
        return discriminator_loss(d(h), d(g(x).detach()), targets).total

    return g, d, loss_g, loss_d


def _layer_instance(case, rng):
    loss, params = case(rng)
    return combined_error(check_elementwise(loss, params))


def _model_instance(rng, coords):
    g, d, loss_g, loss_d = end_to_end_losses(rng)
    errs = []
    for loss, params in ((loss_g, g.parameters() + d.parameters()), (loss_d, d.parameters())):
        errs.append(combined_error(check_directional(loss, params, rng)))
        errs.append(combined_error(check_elementwise(loss, params, max_coords=coords, rng=rng)))
    return max(errs)


def _kink_free(fn, seed: int):
    """Evaluate ``fn(rng)`` on fresh test points until no probe crosses a kink."""
    for draw in range(MAX_DRAWS):
        try:
            return fn(make_rng(derive_seed(seed, draw << 32))), draw + 1
        except KinkCrossing:
            continue
    raise KinkCrossing(f"no kink-free test point in {MAX_DRAWS} draws")


def run_suite(seed: int = 0, instances: int = 5, model_coords: int = 4) -> list[SuiteResult]:
    """Check every layer case and the end-to-end tiny GAN on ``instances`` random points."""
    results = []
    for ci, (name, case) in enumerate(LAYER_CASES.items()):
        for k in range(instances):
            err, draws = _kink_free(lambda rng: _layer_instance(case, rng), derive_seed(seed, 1000 * ci + k))
            results.append(SuiteResult(name, k, err, LAYER_TOL, draws))
    for k in range(instances):
        err, draws = _kink_free(lambda rng: _model_instance(rng, model_coords), derive_seed(seed, 99_000 + k))
        results.append(SuiteResult("end_to_end", k, err, MODEL_TOL, draws))
    return results
