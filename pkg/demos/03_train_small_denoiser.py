"""Train a scaled-down denoiser in about a minute.

The full training preset uses 20000 lines of length 320 and 30 epochs.
This demo shortens the lines and the schedule so the loop is watchable,
then shows the trained network removing noise from a held-out line.
"""

import numpy as np

from pnpmri.core import make_rng
from pnpmri.denoiser import denoise_line, init_model
from pnpmri.fileio import write_model
from pnpmri.synthdata import DatasetConfig, MagnitudeSource, build_dataset
from pnpmri.synthdata import load_training_arrays, make_pair
from pnpmri.training import TrainConfig, train_denoiser

# Small dataset: 6000 lines of length 128 from procedural images.
source = MagnitudeSource(kind="procedural", height=128, width=128)
config = DatasetConfig(total=6000, line_length=128, seed=3)
build_dataset(source, config, "/tmp/demo_train.dset")
train_noisy, train_clean, val_noisy, val_clean, _ = load_training_arrays(
    "/tmp/demo_train.dset"
)
print("train", train_noisy.shape, "val", val_noisy.shape)

# The standard five-layer residual stack; only the schedule is shorter.
model = init_model(seed=0)
best, history = train_denoiser(
    model,
    train_noisy,
    train_clean,
    val_noisy,
    val_clean,
    TrainConfig(epochs=12, batch_size=128, lr=0.001, seed=0),
)

for row in history:
    print(f"epoch {row['epoch']:2d}  lr {row['lr']:.6f}  "
          f"train {row['train_loss']:.6f}  val {row['val_loss']:.6f}")
print("best epoch:", best.training_meta["best_epoch"],
      "val loss", best.training_meta["best_val_loss"])

# Denoise a fresh corrupted line and compare errors.
rng = make_rng(99)
clean = val_clean[0]
noisy = make_pair(clean, 15.0, rng).noisy
denoised = denoise_line(best, noisy)
err_in = np.linalg.norm(noisy - clean) / np.linalg.norm(clean)
err_out = np.linalg.norm(denoised - clean) / np.linalg.norm(clean)
print(f"relative error before {err_in:.3f}, after {err_out:.3f}")

write_model("/tmp/demo_model.dnzr", best)
print("saved model to /tmp/demo_model.dnzr")
