# %% [markdown]
# # Corrupting images and scoring reconstructions
#
# A corruption level `p` removes exactly `floor(p·H·W)` pixel sites. Masks
# drawn from the same seed are nested, so a higher level removes a superset
# of the pixels removed at a lower one. NMSE is the squared error divided
# by the image energy, averaged per image.

# %%
from pathlib import Path

import numpy as np

from ssrgan.corruption import apply_mask, make_mask
from ssrgan.data import save_image, synthetic_images
from ssrgan.metrics import nmse

out = Path("notebook_output")
out.mkdir(exist_ok=True)
img = synthetic_images(1, 64, seed=3)[0]
for p in (0.3, 0.5, 0.8):
    m = make_mask(64, 64, p, 7)
    corrupted = apply_mask(img, m, 0.0)
    save_image(out / f"corrupted_{int(p * 100)}.png", corrupted)
    print(f"p={p}: {m.count} sites removed, NMSE of the corrupted image {nmse(img, corrupted):.4f}")

# %% [markdown]
# The dataset score is a mean of per-image ratios, which weights dark and
# bright images equally.

# %%
from ssrgan.metrics import nmse_dataset

pairs = [(np.array([1.0]), np.array([0.5])), (np.array([10.0]), np.array([9.5]))]
print("mean of ratios:", nmse_dataset(pairs).mean, " ratio of sums:", 0.5 / 101)
