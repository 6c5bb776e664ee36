# %% [markdown]
# # Generator and discriminator
#
# The generator keeps the spatial size of its input: two pixel-shuffle
# stages upsample by four and a stride-4 final convolution brings the image
# back. The discriminator answers with one probability per pixel.

# %%
import numpy as np

from ssrgan.core import Tensor, make_rng
from ssrgan.diagnostics import run_suite
from ssrgan.model import build_discriminator, build_generator, forward

g = build_generator(rng=make_rng(0))
d = build_discriminator(rng=make_rng(1))
print(f"generator parameters:     {g.num_parameters():,}")
print(f"discriminator parameters: {d.num_parameters():,}")

x = Tensor(make_rng(2).uniform(-1, 1, (1, 3, 32, 32)).astype(np.float32))
print("G:", x.shape, "->", forward(g, x).shape)
print("D:", x.shape, "->", forward(d, x).shape)

# %% [markdown]
# Every layer, both losses and a tiny end-to-end pair are gradient-checked
# by `run_suite` (also available as `ssrgan gradcheck`).

# %%
results = run_suite(seed=0, instances=1)
for r in results:
    print(f"{r.component:20s} rel_error={r.rel_error:.1e} {'ok' if r.passed else 'FAIL'}")
