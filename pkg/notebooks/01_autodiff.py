# %% [markdown]
# # Reverse-mode autodiff on numpy arrays
#
# `ssrgan.core` holds the small tensor engine used by everything else: a
# `Tensor` records how it was computed, and `backward` walks that record in
# reverse. The finite-difference checker then confirms the gradients.

# %%
import numpy as np

from ssrgan.core import Adam, Tensor, backward, make_rng, mse, mul, sum_all
from ssrgan.core.gradcheck import check_elementwise, combined_error

theta = Tensor([1.0], requires_grad=True)
backward(mse(theta, Tensor([0.0])))
print("d/dθ θ² at θ=1:", theta.grad)

# %% [markdown]
# Gradients of any expression can be compared against central differences
# in float64.

# %%
rng = make_rng(0)
x = Tensor(rng.standard_normal(5), requires_grad=True, dtype=np.float64)
y = Tensor(rng.standard_normal(5), requires_grad=True, dtype=np.float64)
err = combined_error(check_elementwise(lambda: sum_all(mul(mul(x, x), y)), [x, y]))
print(f"relative error of d(x²y): {err:.2e}")

# %% [markdown]
# Adam on a toy quadratic: the first step moves each coordinate by almost
# exactly the learning rate, whatever the gradient's scale.

# %%
w = Tensor(np.array([3.0, -0.01]), requires_grad=True, dtype=np.float64)
opt = Adam([w], lr=0.1)
for step in range(200):
    opt.zero_grad()
    backward(mse(w, Tensor(np.zeros(2), dtype=np.float64)))
    opt.step()
    if step == 0:
        print("after one step:", w.data)
print("after 200 steps:", np.round(w.data, 4))
