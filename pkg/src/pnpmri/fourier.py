"""Centered, orthonormal FFTs (DC at index ``n // 2``, unitary scaling).

All transforms are ``fftshift(fft(ifftshift(x), norm="ortho"))`` so that the
inverse equals the adjoint and norms are preserved. 2D transforms act on the
last two axes, 1D transforms on the last axis, so coil stacks and line
batches pass through unchanged. Any length is supported, including the
non-power-of-two 320 used throughout.
"""

from __future__ import annotations

import numpy as np

_AXES_2D = (-2, -1)


def fft2c(img: np.ndarray) -> np.ndarray:
    tmp = np.fft.ifftshift(img, axes=_AXES_2D)
    tmp = np.fft.fft2(tmp, norm="ortho")
    return np.fft.fftshift(tmp, axes=_AXES_2D)


def ifft2c(ks: np.ndarray) -> np.ndarray:
    tmp = np.fft.ifftshift(ks, axes=_AXES_2D)
    tmp = np.fft.ifft2(tmp, norm="ortho")
    return np.fft.fftshift(tmp, axes=_AXES_2D)


def fft1c(line: np.ndarray) -> np.ndarray:
    tmp = np.fft.ifftshift(line, axes=(-1,))
    tmp = np.fft.fft(tmp, norm="ortho")
    return np.fft.fftshift(tmp, axes=(-1,))


def ifft1c(line: np.ndarray) -> np.ndarray:
    tmp = np.fft.ifftshift(line, axes=(-1,))
    tmp = np.fft.ifft(tmp, norm="ortho")
    return np.fft.fftshift(tmp, axes=(-1,))
