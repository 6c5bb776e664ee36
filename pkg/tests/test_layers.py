import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import conv2d_direct, random_conv_cases, random_tconv_cases, transpose_conv2d_direct
from ssrgan.core import Tensor, backward, make_rng, mul, sum_all
from ssrgan.core.gradcheck import check_elementwise, combined_error
from ssrgan.errors import DegenerateBatchError, ShapeError
from ssrgan.layers import (
    BatchNorm2d, ResidualBlock, activation, batch_norm2d, conv2d, leaky_relu, pixel_shuffle,
    pixel_unshuffle, prelu, sigmoid, tanh, transpose_conv2d, transpose_output_size,
)


def T(a, grad=False):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=grad, dtype=np.float64)


def test_conv_sum_of_ones():
    out = conv2d(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))), Tensor(np.zeros(1)))
    assert out.shape == (1, 1, 1, 1) and out.data.item() == 9


def test_conv_identity_kernel():
    x = make_rng(1).standard_normal((2, 3, 5, 4)).astype(np.float32)
    w = np.eye(3, dtype=np.float32).reshape(3, 3, 1, 1)
    np.testing.assert_array_equal(conv2d(Tensor(x), Tensor(w), None).data, x)


@pytest.mark.parametrize("case", list(random_conv_cases(seed=2024, count=50)), ids=range(50))
def test_conv_matches_direct_summation(case):
    x, w, b, s, p = case
    got = conv2d(T(x), T(w), T(b), s, p).data
    np.testing.assert_allclose(got, conv2d_direct(x, w, b, s, p), atol=1e-10)


def test_conv_float32_vs_oracle():
    x = make_rng(3).standard_normal((2, 3, 8, 8))
    w = make_rng(4).standard_normal((4, 3, 3, 3))
    got = conv2d(Tensor(x), Tensor(w), None, 1, 1).data
    assert np.abs(got - conv2d_direct(x, w, None, 1, 1)).max() < 1e-5


def test_conv_errors():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))), None)
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))), None)


@pytest.mark.parametrize("case", list(random_tconv_cases(seed=77, count=50)), ids=range(50))
def test_transpose_conv_matches_direct_scatter(case):
    x, w, b, s, p = case
    got = transpose_conv2d(T(x), T(w), T(b), s, p).data
    np.testing.assert_allclose(got, transpose_conv2d_direct(x, w, b, s, p), atol=1e-10)


def test_transpose_single_contribution():
    out = transpose_conv2d(Tensor(np.full((1, 1, 1, 1), 2.5)), Tensor(np.ones((1, 1, 4, 4))),
                           Tensor(np.zeros(1)), 4, 0)
    assert out.shape == (1, 1, 4, 4)
    np.testing.assert_array_equal(out.data, 2.5)


def test_transpose_output_extent():
    assert transpose_output_size(32, 4, 4, 0) == 128


def test_transpose_is_adjoint_of_conv():
    # <conv(x), z> == <x, conv^T(z)>; extents chosen so the transpose lands back on 7x9
    rng = make_rng(5)
    x = rng.standard_normal((2, 3, 7, 9))
    w = rng.standard_normal((4, 3, 3, 3))
    y = conv2d(T(x), T(w), None, 2, 1).data
    z = rng.standard_normal(y.shape)
    back = transpose_conv2d(T(z), T(w), None, 2, 1).data
    assert back.shape == x.shape
    assert np.vdot(y, z) == pytest.approx(np.vdot(x, back), rel=1e-12)


def test_pixel_shuffle_definition():
    x = Tensor(np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 4, 1, 1))
    np.testing.assert_array_equal(pixel_shuffle(x, 2).data, [[[[1, 2], [3, 4]]]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(2, 3), st.integers(1, 4), st.integers(1, 4),
       st.integers(0, 2**32 - 1))
def test_pixel_shuffle_roundtrip_and_multiset(n, c, r, h, w, seed):
    x = make_rng(seed).standard_normal((n, c * r * r, h, w)).astype(np.float32)
    y = pixel_shuffle(Tensor(x), r).data
    assert y.shape == (n, c, h * r, w * r)
    np.testing.assert_array_equal(np.sort(y, axis=None), np.sort(x, axis=None))
    np.testing.assert_array_equal(pixel_unshuffle(Tensor(y), r).data, x)


def test_pixel_shuffle_indivisible():
    with pytest.raises(ShapeError):
        pixel_shuffle(Tensor(np.ones((1, 3, 2, 2))), 2)


def test_batch_norm_fixed_point_and_annihilator():
    rng = make_rng(8)
    x = rng.standard_normal((4, 2, 5, 5))
    x = (x - x.mean(axis=(0, 2, 3), keepdims=True)) / x.std(axis=(0, 2, 3), keepdims=True)
    rm, rv = np.zeros(2), np.ones(2)
    out = batch_norm2d(T(x), T(np.ones(2)), T(np.zeros(2)), rm, rv, True).data
    np.testing.assert_allclose(out, x, atol=1e-4)
    beta = np.array([0.3, -0.7])
    out = batch_norm2d(T(x), T(np.zeros(2)), T(beta), rm, rv, True).data
    np.testing.assert_allclose(out, np.broadcast_to(beta.reshape(1, 2, 1, 1), x.shape))


def test_batch_norm_running_stats():
    x = make_rng(9).standard_normal((3, 1, 4, 4)) * 2 + 5
    rm, rv = np.zeros(1), np.ones(1)
    batch_norm2d(T(x), T(np.ones(1)), T(np.zeros(1)), rm, rv, True)
    np.testing.assert_allclose(rm, 0.1 * x.mean())
    np.testing.assert_allclose(rv, 0.9 + 0.1 * x.var(ddof=1))


def test_batch_norm_eval_uses_running_stats():
    bn = BatchNorm2d(1, dtype=np.float64)
    bn.running_mean[:] = 2.0
    bn.running_var[:] = 4.0
    bn.eval()
    out = bn(T(np.full((1, 1, 2, 2), 4.0))).data
    np.testing.assert_allclose(out, 2.0 / np.sqrt(4.0 + 1e-5))


def test_batch_norm_degenerate():
    with pytest.raises(DegenerateBatchError):
        batch_norm2d(T(np.ones((1, 1, 1, 1))), T(np.ones(1)), T(np.zeros(1)), np.zeros(1), np.ones(1), True)


def test_activation_values():
    assert tanh(T([0.0])).data[0] == 0
    assert sigmoid(T([0.0])).data[0] == 0.5
    np.testing.assert_array_equal(leaky_relu(T([-1.0, 2.0])).data, [-0.2, 2.0])
    x = T(make_rng(0).standard_normal(10))
    np.testing.assert_array_equal(prelu(x, T([1.0])).data, x.data)
    np.testing.assert_array_equal(activation("leaky_relu", T([-5.0])).data, [-1.0])


def test_sigmoid_saturates_without_overflow():
    with np.errstate(all="raise"):
        y = sigmoid(Tensor(np.array([-1e4, 1e4], dtype=np.float32))).data
    np.testing.assert_array_equal(y, [0, 1])


def test_kink_subgradient_uses_negative_slope():
    x = T([0.0], grad=True)
    a = T([0.3], grad=True)
    backward(sum_all(prelu(x, a)))
    np.testing.assert_array_equal(x.grad, [0.3])


def test_residual_zero_body_is_identity():
    block = ResidualBlock(3, rng=make_rng(1), dtype=np.float64)
    for conv in (block.body[0], block.body[3]):
        conv.weight.data[:] = 0
        conv.bias.data[:] = 0
    x = T(make_rng(2).standard_normal((2, 3, 4, 4)))
    np.testing.assert_array_equal(block(x).data, x.data)


def test_residual_shape_mismatch():
    with pytest.raises(ShapeError):
        ResidualBlock(3, rng=make_rng(1))(Tensor(np.ones((1, 2, 4, 4))))


def test_layer_gradients_small_instance():
    rng = make_rng(12)
    x, w, b = T(rng.standard_normal((1, 2, 5, 5)), True), T(rng.standard_normal((3, 2, 3, 3)), True), T(rng.standard_normal(3), True)
    r = T(rng.standard_normal((1, 3, 3, 3)))
    err = combined_error(check_elementwise(lambda: sum_all(mul(conv2d(x, w, b, 2, 1), r)), [x, w, b]))
    assert err < 1e-6
