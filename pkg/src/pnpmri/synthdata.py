"""Paired clean/noisy 1D training data synthesized from random images.

The recipe: render a random piecewise-smooth magnitude image (or take user
supplied grayscale images), pair it with a random smooth phase map built by
Fourier truncation of white noise, pull complex rows out of the product,
and corrupt each row with white Gaussian noise at a random SNR. No natural
image data is involved anywhere.

Generation is deterministic: a root seed is split into one independent
stream per source image plus one for the train/validation split, so the
same config always produces byte-identical dataset files and the per-image
work could be farmed out to parallel workers without changing the output.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import RNG_ALGORITHM
from .fileio import dataset_dtype, read_dataset, read_manifest, read_pgm
from .fileio import write_dataset, write_manifest
from .fourier import ifft2c

PHASE_TRUNCATION_SIZES = (2, 3, 4, 5)


@dataclass(frozen=True)
class DatasetRecord:
    """One training pair: a clean complex line, its noisy copy, and the SNR."""

    clean: np.ndarray
    noisy: np.ndarray
    snr_db: float


@dataclass(frozen=True)
class MagnitudeSource:
    """Where magnitude images come from.

    ``kind`` is "procedural" (random images rendered on the fly, sized
    height x width) or "files" (a fixed tuple of grayscale arrays in
    [0, 1]).
    """

    kind: str = "procedural"
    images: tuple = ()
    height: int = 320
    width: int = 320

    def __post_init__(self) -> None:
        if self.kind not in ("procedural", "files"):
            raise ValueError(f"unknown magnitude source kind {self.kind!r}")
        if self.kind == "files":
            if len(self.images) == 0:
                raise ValueError("files source needs at least one image")
            for img in self.images:
                arr = np.asarray(img)
                if arr.ndim != 2:
                    raise ValueError(f"source images must be 2D, got {arr.shape}")
                if arr.min() < 0.0 or arr.max() > 1.0:
                    raise ValueError("source image values must lie in [0, 1]")
        else:
            if self.height < 8 or self.width < 8:
                raise ValueError(
                    f"procedural source needs at least 8x8, got "
                    f"{self.height}x{self.width}"
                )


@dataclass(frozen=True)
class DatasetConfig:
    total: int
    line_length: int = 320
    snr_min: float = 5.0
    snr_max: float = 40.0
    train_fraction: float = 0.9
    lines_per_image: int = 320
    seed: int = 0

    def __post_init__(self) -> None:
        if self.total < 1:
            raise ValueError(f"total must be positive, got {self.total}")
        if self.line_length < 1:
            raise ValueError(f"line_length must be positive, got {self.line_length}")
        if not (np.isfinite(self.snr_min) and np.isfinite(self.snr_max)):
            raise ValueError("SNR bounds must be finite")
        if self.snr_min > self.snr_max:
            raise ValueError(
                f"snr_min {self.snr_min} exceeds snr_max {self.snr_max}"
            )
        if not 0.0 <= self.train_fraction <= 1.0:
            raise ValueError(
                f"train_fraction must be in [0, 1], got {self.train_fraction}"
            )
        if self.lines_per_image < 1:
            raise ValueError(
                f"lines_per_image must be positive, got {self.lines_per_image}"
            )


def _bilinear_upsample(coarse: np.ndarray, h: int, w: int) -> np.ndarray:
    """Stretch a small grid to (h, w) by separable linear interpolation."""
    ch, cw = coarse.shape
    rows = np.linspace(0.0, ch - 1.0, h)
    cols = np.linspace(0.0, cw - 1.0, w)
    tmp = np.empty((ch, w), dtype=np.float64)
    for i in range(ch):
        tmp[i] = np.interp(cols, np.arange(cw), coarse[i])
    out = np.empty((h, w), dtype=np.float64)
    for j in range(w):
        out[:, j] = np.interp(rows, np.arange(ch), tmp[:, j])
    return out


def procedural_magnitude(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    """Random piecewise-smooth image in [0, 1].

    A low-frequency background plus 3 to 12 rotated ellipses and rectangles
    with signed intensities, clipped to [0, 1] at the end.
    """
    if h < 8 or w < 8:
        raise ValueError(f"image must be at least 8x8, got {h}x{w}")
    coarse = rng.uniform(0.05, 0.45, size=(4, 4))
    img = _bilinear_upsample(coarse, h, w)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    n_shapes = int(rng.integers(3, 13))
    for _ in range(n_shapes):
        is_ellipse = rng.random() < 0.5
        cy = rng.uniform(0.1, 0.9) * (h - 1)
        cx = rng.uniform(0.1, 0.9) * (w - 1)
        ry = rng.uniform(0.05, 0.30) * h
        rx = rng.uniform(0.05, 0.30) * w
        amp = rng.uniform(-0.5, 0.8)
        theta = rng.uniform(0.0, np.pi)
        u = np.cos(theta) * (xs - cx) + np.sin(theta) * (ys - cy)
        v = -np.sin(theta) * (xs - cx) + np.cos(theta) * (ys - cy)
        if is_ellipse:
            inside = (u / rx) ** 2 + (v / ry) ** 2 <= 1.0
        else:
            inside = (np.abs(u) <= rx) & (np.abs(v) <= ry)
        img[inside] += amp
    return np.clip(img, 0.0, 1.0)


def random_phase_map(
    h: int, w: int, truncation_size: int, rng: np.random.Generator
) -> np.ndarray:
    """Smooth unit-magnitude phase map from truncated white noise.

    Complex white noise is restricted to the central truncation_size x
    truncation_size block of centered k-space, transformed back, and
    normalized pixelwise to magnitude one. Smaller truncation sizes give
    smoother phase. A pixel that lands exactly on zero gets phase zero.
    """
    if truncation_size not in PHASE_TRUNCATION_SIZES:
        raise ValueError(
            f"truncation_size must be one of {PHASE_TRUNCATION_SIZES}, "
            f"got {truncation_size}"
        )
    re = rng.standard_normal((h, w))
    im = rng.standard_normal((h, w))
    noise = re + 1j * im

    kept = np.zeros_like(noise)
    r0 = h // 2 - truncation_size // 2
    c0 = w // 2 - truncation_size // 2
    r0 = max(r0, 0)
    c0 = max(c0, 0)
    kept[r0 : r0 + truncation_size, c0 : c0 + truncation_size] = noise[
        r0 : r0 + truncation_size, c0 : c0 + truncation_size
    ]
    z = ifft2c(kept)
    mag = np.abs(z)
    out = np.ones_like(z)
    np.divide(z, mag, out=out, where=mag > 0)
    return out


def extract_lines(
    magnitude: np.ndarray,
    phase: np.ndarray,
    line_length: int,
    rng: np.random.Generator,
    count: int,
    return_rows: bool = False,
):
    """Pull ``count`` random rows out of magnitude * phase, center-cropped.

    Returns a (count, line_length) complex array; with ``return_rows`` also
    the chosen row indices.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.complex128)
    if magnitude.shape != phase.shape or magnitude.ndim != 2:
        raise ValueError(
            f"magnitude {magnitude.shape} and phase {phase.shape} must be "
            "matching 2D arrays"
        )
    h, w = magnitude.shape
    if line_length > w:
        raise ValueError(f"line_length {line_length} exceeds image width {w}")
    image = magnitude * phase
    rows = rng.integers(0, h, size=count)
    col_start = (w - line_length) // 2
    lines = image[rows, col_start : col_start + line_length]
    if return_rows:
        return lines, rows
    return lines


def make_pair(
    clean: np.ndarray, snr_db: float, rng: np.random.Generator
) -> DatasetRecord:
    """Corrupt a clean line with complex white Gaussian noise at snr_db.

    The per-sample noise variance is P / 10**(snr_db / 10) with P the mean
    squared magnitude of the clean line, split evenly between real and
    imaginary parts.
    """
    clean = np.asarray(clean, dtype=np.complex128)
    if clean.ndim != 1:
        raise ValueError(f"clean line must be 1D, got shape {clean.shape}")
    power = float(np.mean(np.abs(clean) ** 2))
    if power == 0.0:
        raise ValueError("clean line has zero power")
    sigma2 = power / (10.0 ** (snr_db / 10.0))
    std = np.sqrt(sigma2 / 2.0)
    noise = std * (rng.standard_normal(clean.size) + 1j * rng.standard_normal(clean.size))
    return DatasetRecord(clean=clean, noisy=clean + noise, snr_db=float(snr_db))


def _slot_magnitude(
    source: MagnitudeSource, slot: int, rng: np.random.Generator
) -> np.ndarray:
    if source.kind == "procedural":
        return procedural_magnitude(source.height, source.width, rng)
    return np.asarray(source.images[slot % len(source.images)], dtype=np.float64)


def split_counts(total: int, train_fraction: float) -> tuple[int, int]:
    """Number of training and validation records for a given split."""
    n_train = int(round(train_fraction * total))
    return n_train, total - n_train


def build_dataset(
    source: MagnitudeSource, config: DatasetConfig, out_path
) -> dict:
    """Generate the full dataset file plus its train/validation split manifest.

    Records are produced image by image: each image slot gets its own
    seed-derived stream that draws the magnitude (procedural only), a phase
    truncation size in {2..5}, the phase map, row indices, per-line SNRs,
    and the noise. A zero-power row (possible when dark regions clip to
    exactly zero) is redrawn from the same stream. The split manifest at
    ``out_path + ".split.json"`` lists record indices per split and a
    per-record "image:row:column" provenance string.
    """
    total = config.total
    length = config.line_length
    n_slots = -(-total // config.lines_per_image)
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(n_slots + 1)

    records = np.zeros(total, dtype=dataset_dtype(length))
    provenance: list[str] = []
    produced = 0
    for slot in range(n_slots):
        rng = np.random.Generator(np.random.PCG64(children[slot]))
        magnitude = _slot_magnitude(source, slot, rng)
        truncation = int(rng.integers(2, 6))
        phase = random_phase_map(*magnitude.shape, truncation, rng)
        n_lines = min(config.lines_per_image, total - produced)
        lines, rows = extract_lines(
            magnitude, phase, length, rng, n_lines, return_rows=True
        )
        lines = np.array(lines)
        rows = np.array(rows)
        snrs = rng.uniform(config.snr_min, config.snr_max, size=n_lines)
        col_start = (magnitude.shape[1] - length) // 2
        for j in range(n_lines):
            attempts = 0
            while float(np.sum(np.abs(lines[j]) ** 2)) == 0.0:
                attempts += 1
                if attempts > 100:
                    raise RuntimeError(
                        f"image slot {slot} keeps producing zero-power lines"
                    )
                redraw, redraw_rows = extract_lines(
                    magnitude, phase, length, rng, 1, return_rows=True
                )
                lines[j] = redraw[0]
                rows[j] = redraw_rows[0]
            pair = make_pair(lines[j], snrs[j], rng)
            idx = produced + j
            records[idx]["snr_db"] = pair.snr_db
            records[idx]["clean"] = pair.clean
            records[idx]["noisy"] = pair.noisy
            provenance.append(f"{slot}:{int(rows[j])}:{col_start}")
        produced += n_lines

    split_rng = np.random.Generator(np.random.PCG64(children[-1]))
    perm = split_rng.permutation(total)
    n_train, _ = split_counts(total, config.train_fraction)
    train_idx = np.sort(perm[:n_train])
    val_idx = np.sort(perm[n_train:])

    source_info = {
        "kind": source.kind,
        "n_images": n_slots if source.kind == "procedural" else len(source.images),
        "lines_per_image": config.lines_per_image,
    }
    if source.kind == "procedural":
        source_info["height"] = source.height
        source_info["width"] = source.width
    info = {
        "snr_min": config.snr_min,
        "snr_max": config.snr_max,
        "seed": config.seed,
        "train_fraction": config.train_fraction,
        "source": source_info,
    }
    write_dataset(out_path, records, info)
    write_manifest(
        os.fspath(out_path) + ".split.json",
        {
            "rng": RNG_ALGORITHM,
            "seed": config.seed,
            "total": total,
            "train_fraction": config.train_fraction,
            "n_train": int(n_train),
            "n_val": int(total - n_train),
            "train": [int(i) for i in train_idx],
            "val": [int(i) for i in val_idx],
            "provenance": provenance,
        },
    )
    return {
        "path": os.fspath(out_path),
        "total": total,
        "n_train": int(n_train),
        "n_val": int(total - n_train),
        "n_images": n_slots,
    }


def source_from_dir(path) -> MagnitudeSource:
    """Build a files source from every PGM image in a directory (sorted)."""
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
    if not names:
        raise ValueError(f"no PGM images found in {os.fspath(path)}")
    images = []
    for name in names:
        mag, _ = read_pgm(os.path.join(path, name))
        peak = float(mag.max())
        if peak > 1.0:
            mag = mag / peak
        images.append(mag)
    return MagnitudeSource(kind="files", images=tuple(images))


def load_split(dataset_path) -> dict:
    return read_manifest(os.fspath(dataset_path) + ".split.json")


def load_training_arrays(dataset_path):
    """Dataset plus split manifest -> (train noisy/clean, val noisy/clean, header)."""
    records, header = read_dataset(dataset_path)
    split = load_split(dataset_path)
    train_idx = np.asarray(split["train"], dtype=np.intp)
    val_idx = np.asarray(split["val"], dtype=np.intp)
    return (
        records["noisy"][train_idx],
        records["clean"][train_idx],
        records["noisy"][val_idx],
        records["clean"][val_idx],
        header,
    )
