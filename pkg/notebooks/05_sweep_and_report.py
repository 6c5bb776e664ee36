# %% [markdown]
# # Sweeping the corruption level
#
# One model is trained per level, then each is scored on the test split.
# `write_report` merges the run directories into level and epoch curves
# (CSV and PNG), the same output as `ssrgan report`.

# %%
from pathlib import Path

from ssrgan.report import write_report
from ssrgan.training import TrainConfig, sweep

cfg = TrainConfig(synthetic_count=40, train_fraction=0.8, image_size=32, batch_size=8,
                  epochs=4, checkpoint_every=4, gen_width=8, gen_blocks=1,
                  disc_ladder=[8, 16, 32, 64], nmse_subset=8)
out = Path("notebook_output/sweep")
for row in sweep(cfg, [0.3, 0.5, 0.8], out):
    print(f"level {row[1]}: test NMSE {float(row[3]):.4f}")

levels, epochs = write_report(out, Path("notebook_output/report"))
print(f"report: {len(levels)} level points, {len(epochs)} epoch points")
