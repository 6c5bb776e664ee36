from ssrgan.core.tensor import (
    DEFAULT_DTYPE, Parameter, Tensor, add, all_finite, as_tensor, backward, elementwise,
    full, mean_all, mse, mul, no_grad, ones, reshape, scalar_add, scalar_mul, sub, sum_all,
    tensor_new, uniform, zero_grads, zeros, zeros_like,
)
from ssrgan.core.rng import derive_seed, get_state, make_rng, set_state
from ssrgan.core.optim import Adam, AdamState, adam_step

__all__ = [
    "DEFAULT_DTYPE", "Parameter", "Tensor", "add", "all_finite", "as_tensor", "backward",
    "elementwise", "full", "mean_all", "mse", "mul", "no_grad", "ones", "reshape",
    "scalar_add", "scalar_mul", "sub", "sum_all", "tensor_new", "uniform", "zero_grads",
    "zeros", "zeros_like", "derive_seed", "get_state", "make_rng", "set_state", "Adam",
    "AdamState", "adam_step",
]
