import numpy as np
import pytest

from oracles import discriminator_param_tally, generator_param_tally
from ssrgan.core import Tensor, make_rng
from ssrgan.errors import ConfigError, ShapeError
from ssrgan.model import (
    DiscriminatorConfig, GeneratorConfig, build_discriminator, build_generator, forward,
)

SMALL_G = GeneratorConfig(width=8, n_blocks=1)
SMALL_D = DiscriminatorConfig(ladder=(8, 8, 8, 8))


def _img(n, size, seed=0):
    return Tensor(make_rng(seed).uniform(-1, 1, (n, 3, size, size)).astype(np.float32))


@pytest.mark.parametrize("size", [8, 32, 48])
def test_small_shapes_match_input(size):
    g, d = build_generator(SMALL_G, make_rng(0)), build_discriminator(SMALL_D, make_rng(1))
    x = _img(2, size)
    assert forward(g, x).shape == (2, 3, size, size)
    assert forward(d, x).shape == (2, 1, size, size)


def test_default_parameter_counts_match_tally():
    assert build_generator(rng=make_rng(0)).num_parameters() == generator_param_tally() == 808_332
    assert build_discriminator(rng=make_rng(0)).num_parameters() == discriminator_param_tally() == 1_560_961


@pytest.mark.parametrize("kw", [dict(width=16, n_blocks=3), dict(width=8, n_blocks=1, n_shuffle=1),
                                dict(width=8, n_blocks=2, use_bn=False)])
def test_parameter_tally_other_configs(kw):
    assert build_generator(GeneratorConfig(**kw), make_rng(0)).num_parameters() == generator_param_tally(**kw)


def test_one_shuffle_stage_keeps_shape():
    g = build_generator(GeneratorConfig(width=8, n_blocks=1, n_shuffle=1), make_rng(0))
    assert forward(g, _img(1, 16)).shape == (1, 3, 16, 16)


@pytest.mark.parametrize("size", [30, 4, 12 + 2])
def test_bad_input_size_rejected(size):
    g = build_generator(SMALL_G, make_rng(0))
    with pytest.raises(ConfigError):
        forward(g, _img(1, size))


def test_wrong_channel_count():
    g = build_generator(SMALL_G, make_rng(0))
    with pytest.raises(ShapeError):
        forward(g, Tensor(np.zeros((1, 1, 16, 16), np.float32)))


@pytest.mark.parametrize("cfg", [GeneratorConfig(n_blocks=0), GeneratorConfig(n_shuffle=3)])
def test_bad_generator_config(cfg):
    with pytest.raises(ConfigError):
        build_generator(cfg, make_rng(0))


def test_bad_discriminator_strides():
    with pytest.raises(ConfigError):
        build_discriminator(DiscriminatorConfig(strides=(2, 2, 2, 1)), make_rng(0))


def test_generator_range_and_eval_determinism():
    g = build_generator(SMALL_G, make_rng(0))
    x = _img(2, 16)
    a, b = forward(g, x, "eval").data, forward(g, x, "eval").data
    np.testing.assert_array_equal(a, b)
    assert a.min() >= -1 and a.max() <= 1


def test_discriminator_outputs_probabilities():
    d = build_discriminator(SMALL_D, make_rng(0))
    y = forward(d, _img(2, 16), "train").data
    assert y.min() >= 0 and y.max() <= 1


def test_same_seed_same_weights():
    a = build_generator(SMALL_G, make_rng(3)).parameters()
    b = build_generator(SMALL_G, make_rng(3)).parameters()
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.data, q.data)
