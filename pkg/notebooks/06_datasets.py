# %% [markdown]
# # Image folders, official splits and manifests
#
# `scan_dataset` turns a folder of PNG/PPM images into a sorted manifest.
# When the folder carries an official split (a `splits/train.txt` list,
# Oxford-IIIT Pet `annotations/trainval.txt`, or Flowers102 `setid.mat`)
# that split is used; otherwise a seeded fraction split is drawn.

# %%
from pathlib import Path

import numpy as np

from ssrgan.data import load_manifest_images, save_image, scan_dataset

root = Path("notebook_output/folder")
root.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(0)
for i in range(10):
    save_image(root / f"img_{i:02d}.png", rng.uniform(0, 1, (3, 20, 24)))

train = scan_dataset(root, "train", train_fraction=0.8, seed=1)
test = scan_dataset(root, "test", train_fraction=0.8, seed=1)
print(len(train), "train /", len(test), "test")
print(train.to_text())

# %% [markdown]
# Images are resized bilinearly to the working resolution on load.

# %%
batch = load_manifest_images(train, 16)
print(batch.shape, batch.dtype, float(batch.min()), float(batch.max()))
