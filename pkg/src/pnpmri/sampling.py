"""k-space sampling masks: cartesian column masks, uniform random 2D, full.

A mask is a binary keep/drop map over a centered k-space grid. Both random
patterns force a fully sampled low-frequency block so the coil-combined
zero-filled image keeps enough contrast for the iteration to start from.
Masks never store measured data; applying one zeroes dropped entries and
leaves the array layout unchanged (dense with zeros).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import make_rng

DEFAULT_CENTER_FRACTION = 0.08


def _round_half_away(x: float) -> int:
    """Round with ties away from zero (2.5 -> 3), unlike numpy's bankers."""
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


@dataclass(frozen=True)
class SamplingMask:
    """Binary keep map plus the parameters that generated it.

    ``achieved_rate`` is the realized fraction of kept entries, which can
    differ slightly from ``target_rate`` because counts are integers.
    """

    keep: np.ndarray
    pattern: str
    target_rate: float
    achieved_rate: float
    center_fraction: float
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.keep.shape  # type: ignore[return-value]


def _validate_grid(h: int, w: int) -> None:
    if h < 1 or w < 1:
        raise ValueError(f"mask grid must be at least 1x1, got {h}x{w}")


def _validate_rate(rate: float, center_fraction: float) -> None:
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sampling rate must be in (0, 1], got {rate}")
    if not 0.0 <= center_fraction < 1.0:
        raise ValueError(
            f"center_fraction must be in [0, 1), got {center_fraction}"
        )
    if center_fraction >= rate:
        raise ValueError(
            f"center_fraction {center_fraction} does not fit inside the "
            f"sampling budget of rate {rate}"
        )


def _center_band(n: int, fraction: float) -> tuple[int, int]:
    """Start index and width of the centered band of ceil(fraction * n)."""
    band = int(np.ceil(fraction * n))
    band = min(band, n)
    start = n // 2 - band // 2
    return start, band


def make_cartesian1d_mask(
    h: int,
    w: int,
    rate: float,
    center_fraction: float = DEFAULT_CENTER_FRACTION,
    seed: int = 0,
) -> SamplingMask:
    """Keep whole k-space columns: a fixed center band plus random others.

    The number of kept columns is ``round(rate * w)`` (ties away from zero)
    but never fewer than the mandatory center band.
    """
    _validate_grid(h, w)
    _validate_rate(rate, center_fraction)
    n_cols = max(_round_half_away(rate * w), 1)
    start, band = _center_band(w, center_fraction)
    center_cols = np.arange(start, start + band)
    n_cols = max(n_cols, band)

    rng = make_rng(seed)
    outside = np.setdiff1d(np.arange(w), center_cols)
    n_extra = min(n_cols - band, outside.size)
    extra = rng.choice(outside, size=n_extra, replace=False)

    keep = np.zeros((h, w), dtype=np.uint8)
    keep[:, center_cols] = 1
    keep[:, extra] = 1
    achieved = float(keep.sum()) / float(h * w)
    return SamplingMask(
        keep=keep,
        pattern="cartesian1d",
        target_rate=float(rate),
        achieved_rate=achieved,
        center_fraction=float(center_fraction),
        seed=int(seed),
    )


def make_random2d_mask(
    h: int,
    w: int,
    rate: float,
    center_fraction: float = DEFAULT_CENTER_FRACTION,
    seed: int = 0,
) -> SamplingMask:
    """Keep individual k-space points uniformly at random plus a center block.

    The center block is ceil(center_fraction * h) by ceil(center_fraction * w)
    and always kept; random points outside it top the count up to
    ``round(rate * h * w)``.
    """
    _validate_grid(h, w)
    _validate_rate(rate, center_fraction)
    n_points = max(_round_half_away(rate * h * w), 1)

    row_start, row_band = _center_band(h, center_fraction)
    col_start, col_band = _center_band(w, center_fraction)
    keep = np.zeros((h, w), dtype=np.uint8)
    keep[row_start : row_start + row_band, col_start : col_start + col_band] = 1
    n_center = int(keep.sum())
    n_points = max(n_points, n_center)

    rng = make_rng(seed)
    outside = np.flatnonzero(keep.ravel() == 0)
    n_extra = min(n_points - n_center, outside.size)
    extra = rng.choice(outside, size=n_extra, replace=False)
    keep.ravel()[extra] = 1

    achieved = float(keep.sum()) / float(h * w)
    return SamplingMask(
        keep=keep,
        pattern="random2d",
        target_rate=float(rate),
        achieved_rate=achieved,
        center_fraction=float(center_fraction),
        seed=int(seed),
    )


def make_full_mask(h: int, w: int) -> SamplingMask:
    """Identity mask: every k-space entry kept."""
    _validate_grid(h, w)
    keep = np.ones((h, w), dtype=np.uint8)
    return SamplingMask(
        keep=keep,
        pattern="full",
        target_rate=1.0,
        achieved_rate=1.0,
        center_fraction=0.0,
        seed=0,
    )


def apply_mask(kspace: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Zero out dropped entries. Broadcasts over leading (coil) axes."""
    kspace = np.asarray(kspace)
    if kspace.shape[-2:] != mask.keep.shape:
        raise ValueError(
            f"k-space trailing shape {kspace.shape[-2:]} does not match "
            f"mask shape {mask.keep.shape}"
        )
    return kspace * mask.keep
