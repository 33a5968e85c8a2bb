"""Shared complex-array primitives: inner products, norms, and seeded RNG.

Images, k-space stacks, and 1D signal lines are plain ``numpy`` arrays of
``complex128`` (2D ``(H, W)``, 3D ``(coils, H, W)``, and 1D ``(L,)``
respectively). All public math is double precision; treat arrays handed to
or returned from this package as immutable.
"""

from __future__ import annotations

import numpy as np

# Generator algorithm used everywhere; the name is recorded in every file
# header this package writes so outputs remain reproducible.
RNG_ALGORITHM = "pcg64"

# Divide guard for relative quantities.
EPS_DIV = 1e-30


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator: equal seeds give equal draw sequences."""
    return np.random.Generator(np.random.PCG64(seed))


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Sum of conj(a_i) * b_i over all entries (conjugate-linear in ``a``)."""
    a = np.asarray(a)
    b = np.asarray(b)
    require_same_shape(a, b)
    return complex(np.vdot(a, b))


def l2_norm(a: np.ndarray) -> float:
    """Euclidean norm, sqrt(inner_product(a, a).real)."""
    a = np.asarray(a)
    return float(np.sqrt(np.vdot(a, a).real))


def relative_change(x_new: np.ndarray, x_old: np.ndarray) -> float:
    """||x_new - x_old|| / max(||x_old||, EPS_DIV)."""
    x_new = np.asarray(x_new)
    x_old = np.asarray(x_old)
    require_same_shape(x_new, x_old)
    return l2_norm(x_new - x_old) / max(l2_norm(x_old), EPS_DIV)
