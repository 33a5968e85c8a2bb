# Paired 1D training data from procedural images.
#
# No scanner data is involved anywhere: magnitudes come from a seeded
# procedural generator, phases from smooth random maps, and the noisy
# half of each pair from SNR-calibrated complex Gaussian noise.

import numpy as np

from pnpmri.core import make_rng
from pnpmri.synthdata import (
    extract_lines,
    make_pair,
    procedural_magnitude,
    random_phase_map,
)

rng = make_rng(7)

# A procedural magnitude image: smooth blobs with values in [0, 1].
mag = procedural_magnitude(96, 96, rng)
print("magnitude image:", mag.shape, "range", mag.min(), "-", mag.max())

# Attach a smooth unit-magnitude phase and cut the image into rows. The
# truncation size controls smoothness: 3 keeps only the central 3x3 block
# of k-space, so the phase varies slowly across the image.
phase = random_phase_map(96, 96, 3, rng)
lines = extract_lines(mag, phase, line_length=64, rng=rng, count=32)
print("extracted", lines.shape[0], "lines of length", lines.shape[1])

# Corrupt one line at a few SNRs and verify the calibration empirically.
# A single 64-sample line wobbles by a few tenths of a dB; over long
# signals the measured value settles onto the requested one.
clean = lines[3]
for snr_db in (5.0, 15.0, 40.0):
    record = make_pair(clean, snr_db, make_rng(100))
    signal = np.sum(np.abs(record.clean) ** 2)
    noise = np.sum(np.abs(record.noisy - record.clean) ** 2)
    measured = 10 * np.log10(signal / noise)
    print(f"requested {snr_db:5.1f} dB  measured {measured:5.1f} dB")

# The same machinery at scale, through the dataset builder.
from pnpmri.synthdata import DatasetConfig, MagnitudeSource, build_dataset
from pnpmri.fileio import read_dataset

source = MagnitudeSource(kind="procedural", height=96, width=96)
config = DatasetConfig(total=500, line_length=64, snr_min=5, snr_max=40, seed=0)
summary = build_dataset(source, config, "/tmp/demo_pairs.dset")
print("dataset summary:", summary)

records, header = read_dataset("/tmp/demo_pairs.dset")
print("records on disk:", records.shape, "snr range",
      records["snr_db"].min(), "-", records["snr_db"].max())
