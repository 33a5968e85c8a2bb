"""Training loop for the line denoiser: MSE loss, Adam, decayed learning rate.

Training minimizes the mean squared error between the network output on a
noisy line and the matching clean line, averaged over batch entries, line
positions, and the two real channels. The model snapshot with the lowest
validation loss is what comes back, not the final-epoch weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import make_rng
from .denoiser import (
    DenoiserModel,
    _backward,
    _forward_cached,
    _to_channels,
    clone_model,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: float = 0.99
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"need at least one epoch, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be positive, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError(f"lr decay must be in (0, 1], got {self.lr_decay}")


@dataclass
class AdamState:
    """First/second moment accumulators per parameter array, plus step count."""

    m: list
    v: list
    t: int = 0


def init_adam_state(model: DenoiserModel) -> AdamState:
    m = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in model.layers]
    v = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in model.layers]
    return AdamState(m=m, v=v, t=0)


def adam_step(
    model: DenoiserModel,
    grads: list,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update, in place, with bias-corrected moments.

    The epsilon sits outside the square root: step = m_hat / (sqrt(v_hat) + eps).
    """
    state.t += 1
    b1c = 1.0 - beta1**state.t
    b2c = 1.0 - beta2**state.t
    for layer, (dw, db), (mw, mb), (vw, vb) in zip(
        model.layers, grads, state.m, state.v
    ):
        for param, grad, m_acc, v_acc in (
            (layer.weights, dw, mw, vw),
            (layer.bias, db, mb, vb),
        ):
            m_acc *= beta1
            m_acc += (1.0 - beta1) * grad
            v_acc *= beta2
            v_acc += (1.0 - beta2) * grad * grad
            param -= lr * (m_acc / b1c) / (np.sqrt(v_acc / b2c) + eps)


def _check_pair(noisy: np.ndarray, clean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    noisy = np.asarray(noisy, dtype=np.complex128)
    clean = np.asarray(clean, dtype=np.complex128)
    if noisy.ndim != 2 or noisy.shape != clean.shape:
        raise ValueError(
            f"noisy/clean must be matching 2D batches, got {noisy.shape} "
            f"and {clean.shape}"
        )
    return noisy, clean


def gradients(
    model: DenoiserModel, noisy: np.ndarray, clean: np.ndarray
) -> tuple[float, list]:
    """Loss and exact parameter gradients for one batch.

    Returns (loss, grads) where grads is one (dW, db) pair per layer in
    layer order.
    """
    noisy, clean = _check_pair(noisy, clean)
    x = _to_channels(noisy)
    target = _to_channels(clean)
    out, cache = _forward_cached(model, x, keep_cache=True)
    diff = out - target
    loss = float(np.mean(diff * diff))
    dout = (2.0 / diff.size) * diff
    grads = _backward(model, cache, dout)
    return loss, grads


def evaluate_loss(
    model: DenoiserModel,
    noisy: np.ndarray,
    clean: np.ndarray,
    batch_size: int = 1024,
) -> float:
    """Mean squared error of the model over a whole set, run in chunks."""
    noisy, clean = _check_pair(noisy, clean)
    n = noisy.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate loss on an empty set")
    total = 0.0
    for start in range(0, n, batch_size):
        xb = _to_channels(noisy[start : start + batch_size])
        tb = _to_channels(clean[start : start + batch_size])
        out, _ = _forward_cached(model, xb, keep_cache=False)
        diff = out - tb
        total += float(np.sum(diff * diff))
    return total / (n * noisy.shape[1] * 2)


def train_denoiser(
    model: DenoiserModel,
    train_noisy: np.ndarray,
    train_clean: np.ndarray,
    val_noisy: np.ndarray,
    val_clean: np.ndarray,
    config: TrainConfig,
) -> tuple[DenoiserModel, list[dict]]:
    """Train a copy of ``model`` and return the best-validation snapshot.

    Epoch ``e`` (counting from zero) runs at learning rate
    ``lr * lr_decay**e`` over a freshly shuffled pass of the training set.
    The history holds one dict per epoch with the epoch index, learning
    rate, mean training loss, and validation loss. Raises RuntimeError if
    any loss stops being finite. The input model is left untouched.
    """
    train_noisy, train_clean = _check_pair(train_noisy, train_clean)
    val_noisy, val_clean = _check_pair(val_noisy, val_clean)
    n_train = train_noisy.shape[0]
    n_val = val_noisy.shape[0]
    if n_train == 0:
        raise ValueError("training set is empty")

    model = clone_model(model)
    state = init_adam_state(model)
    rng = make_rng(config.seed)
    best: DenoiserModel | None = None
    best_val = np.inf
    best_epoch = -1
    history: list[dict] = []

    for epoch in range(config.epochs):
        lr_epoch = config.lr * config.lr_decay**epoch
        perm = rng.permutation(n_train)
        loss_acc = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grads = gradients(model, train_noisy[idx], train_clean[idx])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss {loss} at epoch {epoch}"
                )
            adam_step(model, grads, state, lr_epoch)
            loss_acc += loss * idx.size
        train_loss = loss_acc / n_train

        if n_val > 0:
            val_loss = evaluate_loss(model, val_noisy, val_clean)
        else:
            val_loss = train_loss
        if not np.isfinite(val_loss):
            raise RuntimeError(f"non-finite validation loss {val_loss} at epoch {epoch}")

        history.append(
            {
                "epoch": epoch,
                "lr": lr_epoch,
                "train_loss": train_loss,
                "val_loss": val_loss,
            }
        )
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best = clone_model(model)

    assert best is not None
    best.training_meta = {
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "lr": config.lr,
        "lr_decay": config.lr_decay,
        "seed": config.seed,
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
        "n_train": n_train,
        "n_val": n_val,
    }
    return best, history
