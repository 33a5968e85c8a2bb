"""Deterministic complex-valued test images for reconstruction experiments.

Phantoms carry a smooth synthetic phase by default (truncation size 3,
fixed seed) so reconstruction exercises the full complex pipeline; a
zero-phase variant exists for ablations. Magnitudes always lie in [0, 1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import make_rng
from .fileio import FileFormatError, read_complex_image, read_pgm
from .synthdata import procedural_magnitude, random_phase_map

PHANTOM_PHASE_TRUNCATION = 3

# Ten-ellipse head phantom, modified contrast variant: per ellipse the
# additive intensity, semi-axes (x, y), center (x, y) in [-1, 1] normalized
# coordinates with y pointing up, and rotation in degrees.
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


@dataclass(frozen=True)
class Phantom:
    """Complex test image plus a descriptor saying how it was made."""

    image: np.ndarray
    descriptor: dict


def _phase_for(h: int, w: int, seed: int, zero_phase: bool) -> np.ndarray:
    if zero_phase:
        return np.ones((h, w), dtype=np.complex128)
    return random_phase_map(h, w, PHANTOM_PHASE_TRUNCATION, make_rng(seed))


def _check_power(image: np.ndarray, what: str) -> None:
    if float(np.sum(np.abs(image) ** 2)) == 0.0:
        raise ValueError(f"{what} has zero power")


def rasterize_shepp_logan(h: int, w: int) -> np.ndarray:
    """Magnitude-only rasterization of the ellipse table onto an h x w grid.

    The coordinate grids are antisymmetrized so that mirror-symmetric
    ellipses rasterize exactly mirror-symmetrically.
    """
    xs = np.linspace(-1.0, 1.0, w)
    xs = (xs - xs[::-1]) / 2.0
    ys = np.linspace(1.0, -1.0, h)
    ys = (ys - ys[::-1]) / 2.0
    grid_x, grid_y = np.meshgrid(xs, ys)
    img = np.zeros((h, w), dtype=np.float64)
    for value, a, b, x0, y0, phi_deg in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(phi_deg)
        c, s = np.cos(phi), np.sin(phi)
        u = (grid_x - x0) * c + (grid_y - y0) * s
        v = -(grid_x - x0) * s + (grid_y - y0) * c
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += value
    # The table sums to exactly 0 or 0.2 in the ventricles; clamp the float
    # residue (about -6e-17) so intensities stay in [0, 1].
    return np.clip(img, 0.0, 1.0)


def shepp_logan(h: int, w: int, zero_phase: bool = False) -> Phantom:
    """Classic head phantom with smooth seed-0 phase."""
    if h < 32 or w < 32:
        raise ValueError(f"phantom must be at least 32x32, got {h}x{w}")
    magnitude = rasterize_shepp_logan(h, w)
    image = magnitude * _phase_for(h, w, 0, zero_phase)
    _check_power(image, "shepp_logan phantom")
    return Phantom(
        image=image,
        descriptor={
            "kind": "shepp_logan",
            "size": [int(h), int(w)],
            "seed": 0,
            "zero_phase": bool(zero_phase),
        },
    )


def synthetic_phantom(
    h: int, w: int, seed: int = 0, zero_phase: bool = False
) -> Phantom:
    """Random piecewise-smooth phantom (same generator as the training data).

    The magnitude and phase are drawn from one stream keyed by ``seed``; an
    all-zero magnitude draw (possible when dark shapes clip everything to
    zero) is discarded and redrawn from the same stream.
    """
    rng = make_rng(seed)
    magnitude = procedural_magnitude(h, w, rng)
    attempts = 0
    while float(np.sum(magnitude**2)) == 0.0:
        attempts += 1
        if attempts > 100:
            raise RuntimeError(f"seed {seed} keeps producing zero-power phantoms")
        magnitude = procedural_magnitude(h, w, rng)
    if zero_phase:
        phase = np.ones((h, w), dtype=np.complex128)
    else:
        phase = random_phase_map(h, w, PHANTOM_PHASE_TRUNCATION, rng)
    image = magnitude * phase
    return Phantom(
        image=image,
        descriptor={
            "kind": "synthetic_brainlike",
            "size": [int(h), int(w)],
            "seed": int(seed),
            "zero_phase": bool(zero_phase),
        },
    )


def load_phantom(path, zero_phase: bool = False) -> Phantom:
    """Read a phantom from a complex image file or an 8-bit PGM.

    Magnitudes above 1 are scaled down by the maximum; in-range images pass
    through untouched, so exporting and re-importing a complex phantom is
    bit exact. Grayscale inputs get the standard seed-0 smooth phase unless
    ``zero_phase`` is set.
    """
    with open(path, "rb") as f:
        sniff = f.read(4)
    if sniff[:2] == b"P5":
        magnitude, _ = read_pgm(path)
        peak = float(magnitude.max())
        if peak > 1.0:
            magnitude = magnitude / peak
        h, w = magnitude.shape
        image = magnitude * _phase_for(h, w, 0, zero_phase)
    elif sniff == b"CIMG":
        image, _ = read_complex_image(path)
        if image.ndim != 2:
            raise FileFormatError(
                f"{os.fspath(path)}: phantom must be a single 2D image"
            )
        peak = float(np.abs(image).max())
        # Unit-magnitude phase factors round to just above 1, so treat
        # anything within float slack of 1 as already normalized; exports
        # then re-import bit exact.
        if peak > 1.0 + 1e-9:
            image = image / peak
        if zero_phase:
            image = np.abs(image).astype(np.complex128)
    else:
        raise FileFormatError(
            f"{os.fspath(path)}: not a PGM or complex image file"
        )
    _check_power(image, "loaded phantom")
    h, w = image.shape
    return Phantom(
        image=image,
        descriptor={
            "kind": "file",
            "size": [int(h), int(w)],
            "seed": 0,
            "zero_phase": bool(zero_phase),
            "path": os.fspath(path),
        },
    )
