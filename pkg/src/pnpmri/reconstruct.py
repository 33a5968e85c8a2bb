"""Plug-and-play proximal-gradient reconstruction and the zero-filled baseline.

Each iteration takes a gradient step toward k-space data consistency and
then applies a denoiser to the intermediate image: with the identity
denoiser the loop is plain gradient descent on the least-squares data term,
and with the trained 1D CNN it alternates physics and learned prior. The
loop starts from zero, so the first iterate is exactly the (denoised)
zero-filled reconstruction and the iteration count includes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import l2_norm, relative_change
from .denoiser import DenoiserModel, apply_denoiser_2d
from .forward_model import adjoint, forward
from .sampling import SamplingMask, apply_mask

DENOISER_KINDS = ("identity", "cnn1d")


@dataclass(frozen=True)
class ReconConfig:
    gamma: float = 1.0
    max_iters: int = 200
    tol: float = 1e-8
    denoiser: str = "identity"
    model: DenoiserModel | None = None

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if not self.tol >= 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if self.denoiser not in DENOISER_KINDS:
            raise ValueError(
                f"denoiser must be one of {DENOISER_KINDS}, got {self.denoiser!r}"
            )
        if self.denoiser == "cnn1d" and self.model is None:
            raise ValueError("cnn1d denoiser needs a model")


@dataclass(frozen=True)
class ReconResult:
    """Final image plus per-iteration telemetry.

    ``residual_history`` holds one (iteration, data-consistency residual,
    relative change) triple per iteration run.
    """

    image: np.ndarray
    iters_run: int
    residual_history: tuple = field(default_factory=tuple)
    stop_reason: str = "max_iters"


def zero_filled(y: np.ndarray, maps: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Adjoint of the forward model applied to the measurements."""
    return adjoint(y, maps, mask)


def residual(
    y: np.ndarray, maps: np.ndarray, mask: SamplingMask, x: np.ndarray
) -> float:
    """Data-consistency residual over sampled entries: ||y - A x||."""
    y = np.asarray(y, dtype=np.complex128)
    return l2_norm(apply_mask(y, mask) - forward(x, maps, mask))


def pnp_reconstruct(
    y: np.ndarray, maps: np.ndarray, mask: SamplingMask, cfg: ReconConfig
) -> ReconResult:
    """Iterate gradient steps on the data term interleaved with denoising.

    Starting from zero, iteration k forms r = x + gamma * A^H(y - A x) and
    sets x to the denoised r; the k = 1 iterate is therefore the denoised
    zero-filled image. Stops when the relative change between consecutive
    iterates drops below ``cfg.tol`` or after ``cfg.max_iters`` iterations.
    Raises RuntimeError (naming the iteration) if an iterate goes
    non-finite.
    """
    y = np.asarray(y, dtype=np.complex128)
    h, w = mask.keep.shape
    x = np.zeros((h, w), dtype=np.complex128)
    history = []
    stop_reason = "max_iters"
    for k in range(1, cfg.max_iters + 1):
        r = x + cfg.gamma * adjoint(y - forward(x, maps, mask), maps, mask)
        if cfg.denoiser == "cnn1d":
            x_new = apply_denoiser_2d(cfg.model, r)
        else:
            x_new = r
        if not np.all(np.isfinite(x_new)):
            raise RuntimeError(f"non-finite iterate at iteration {k}")
        change = relative_change(x_new, x)
        history.append((k, residual(y, maps, mask, x_new), change))
        x = x_new
        if change < cfg.tol:
            stop_reason = "tolerance"
            break
    return ReconResult(
        image=x,
        iters_run=len(history),
        residual_history=tuple(history),
        stop_reason=stop_reason,
    )
