"""Multi-coil MRI forward operator, its adjoint, and measurement noise.

The acquisition is modeled as ``y = M F (S x) + n``: pointwise coil
sensitivity weighting, centered orthonormal 2D FFT per coil, then the
sampling mask. Because the sensitivities are normalized to unit sum of
squared magnitudes and the mask is an orthogonal projection, the whole
operator has norm at most one, which is what lets a plain gradient step
with unit step size stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import l2_norm, make_rng
from .fourier import fft2c, ifft2c
from .sampling import SamplingMask, apply_mask


@dataclass(frozen=True)
class NoiseSpec:
    """Complex white Gaussian noise level relative to measured signal power.

    ``snr_db`` may be ``np.inf`` to mean no noise at all; the measurement
    then passes through bit exact. NaN is rejected.
    """

    snr_db: float
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if np.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")


def simulate_coil_maps(h: int, w: int, coils: int) -> np.ndarray:
    """Deterministic smooth sensitivity maps, shape (coils, h, w).

    Each coil is a Gaussian lobe centered on a circle around the image
    center with a gentle planar phase ramp pointing the same way the lobe
    does. Magnitudes are normalized pointwise so the squared magnitudes sum
    to one everywhere; with a single coil that makes the magnitude exactly
    one at every pixel.
    """
    if h < 1 or w < 1:
        raise ValueError(f"map grid must be at least 1x1, got {h}x{w}")
    if coils < 1:
        raise ValueError(f"need at least one coil, got {coils}")
    if coils == 1:
        # A single-coil sensitivity is unidentifiable; use the unit map so
        # the forward model is exactly the masked Fourier transform.
        return np.ones((1, h, w), dtype=np.complex128)

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    scale = float(min(h, w))
    radius = 0.45 * scale
    sigma = 0.5 * scale

    lobes = np.empty((coils, h, w), dtype=np.float64)
    phases = np.empty((coils, h, w), dtype=np.float64)
    for c in range(coils):
        theta = 2.0 * np.pi * c / coils
        my = cy + radius * np.sin(theta)
        mx = cx + radius * np.cos(theta)
        d2 = (yy - my) ** 2 + (xx - mx) ** 2
        lobes[c] = np.exp(-d2 / (2.0 * sigma**2))
        # Half a cycle of phase across the field of view, oriented with
        # the lobe so coils are not globally phase-aligned.
        phases[c] = (
            np.pi
            * (np.cos(theta) * (xx - cx) + np.sin(theta) * (yy - cy))
            / scale
        )

    # Plain ratio normalization of equal-width Gaussians is a softmax in
    # the squared magnitudes, and a softmax weight always keeps growing
    # toward the image boundary, which would drag every normalized peak
    # onto the edge. Blending the softmax weights with a uniform 1/coils
    # share through a centered Gaussian window keeps each peak near its
    # lobe center while the pointwise sum of squares stays exactly one.
    sq = lobes**2
    total = np.sum(sq, axis=0)
    weights = np.full_like(sq, 1.0 / coils)
    np.divide(sq, total, out=weights, where=total > 0)
    window = np.exp(
        -((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * (0.5 * scale) ** 2)
    )
    magnitude = np.sqrt(window * weights + (1.0 - window) / coils)
    return (magnitude * np.exp(1j * phases)).astype(np.complex128)


def _check_geometry(
    maps: np.ndarray, mask: SamplingMask, image_shape: tuple[int, int]
) -> None:
    if maps.ndim != 3:
        raise ValueError(f"coil maps must be 3D (coils, h, w), got {maps.shape}")
    if maps.shape[1:] != image_shape:
        raise ValueError(
            f"coil maps {maps.shape[1:]} do not match image {image_shape}"
        )
    if mask.keep.shape != image_shape:
        raise ValueError(
            f"mask {mask.keep.shape} does not match image {image_shape}"
        )


def forward(x: np.ndarray, maps: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Apply the acquisition operator: (h, w) image -> (coils, h, w) k-space.

    Dropped k-space entries are kept in the array as exact zeros.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {x.shape}")
    _check_geometry(maps, mask, x.shape)
    coil_images = maps * x[None, :, :]
    return apply_mask(fft2c(coil_images), mask)


def adjoint(y: np.ndarray, maps: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Apply the exact adjoint: (coils, h, w) k-space -> (h, w) image."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3:
        raise ValueError(f"k-space must be 3D (coils, h, w), got {y.shape}")
    _check_geometry(maps, mask, y.shape[1:])
    if y.shape[0] != maps.shape[0]:
        raise ValueError(
            f"k-space has {y.shape[0]} coils but maps have {maps.shape[0]}"
        )
    coil_images = ifft2c(apply_mask(y, mask))
    return np.sum(np.conj(maps) * coil_images, axis=0)


def add_measurement_noise(
    y: np.ndarray, mask: SamplingMask, spec: NoiseSpec
) -> np.ndarray:
    """Add complex white Gaussian noise on the sampled entries only.

    The per-entry noise variance is ``P / 10**(snr_db / 10)`` where ``P`` is
    the mean squared magnitude of ``y`` over sampled entries, split evenly
    between real and imaginary parts. With ``snr_db = inf`` the input is
    returned unchanged.
    """
    y = np.asarray(y, dtype=np.complex128)
    if np.isinf(spec.snr_db) and spec.snr_db > 0:
        return y
    keep = mask.keep.astype(bool)
    n_sampled = int(keep.sum()) * (y.size // keep.size)
    if n_sampled == 0:
        return y
    power = float(np.sum(np.abs(y * mask.keep) ** 2)) / n_sampled
    if power == 0.0:
        raise ValueError("zero signal power: cannot calibrate noise to an SNR")
    sigma2 = power / (10.0 ** (spec.snr_db / 10.0))
    std = np.sqrt(sigma2 / 2.0)
    rng = make_rng(spec.rng_seed)
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + std * noise * mask.keep


def estimate_op_norm(
    maps: np.ndarray,
    mask: SamplingMask,
    iters: int = 20,
    seed: int = 0,
) -> float:
    """Power iteration estimate of the operator norm of the forward model."""
    if iters < 1:
        raise ValueError(f"need at least one iteration, got {iters}")
    h, w = maps.shape[1:]
    rng = make_rng(seed)
    x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
    x = x / max(l2_norm(x), 1e-30)
    lam = 0.0
    for _ in range(iters):
        z = adjoint(forward(x, maps, mask), maps, mask)
        lam = l2_norm(z)
        if lam == 0.0:
            return 0.0
        x = z / lam
    return float(np.sqrt(lam))
