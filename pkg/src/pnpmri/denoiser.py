"""Small 1D convolutional denoiser for complex signal lines.

A complex line of length L is viewed as a real array of shape (L, 2)
holding real and imaginary parts as channels. The network is a stack of
same-padded 1D convolutions with ReLU between them and a global residual
connection, so the stack learns the noise rather than the signal.

The convolution engine works on zero-padded channels-last batches of shape
(batch, L + 2*pad, channels). A same-padded convolution then becomes one
matrix product per kernel tap on the flattened buffer: output row ``r``
accumulates ``x[r + k - pad] @ w[k]``. Rows that bleed across batch items
land in the pad rows, which are zeroed after every layer, so a whole batch
runs through BLAS without an im2col copy. The backward pass below mirrors
this with the same shifted products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import make_rng

DEFAULT_CHANNELS = (2, 64, 64, 64, 64, 2)
DEFAULT_KERNEL_SIZE = 3


@dataclass
class Conv1dLayer:
    """One convolution layer: weights (out_ch, in_ch, kernel), bias (out_ch,)."""

    weights: np.ndarray
    bias: np.ndarray


@dataclass
class DenoiserModel:
    layers: list[Conv1dLayer]
    residual: bool = True
    training_meta: dict = field(default_factory=dict)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def channels(self) -> tuple[int, ...]:
        first_in = self.layers[0].weights.shape[1]
        return (first_in,) + tuple(l.weights.shape[0] for l in self.layers)

    @property
    def kernel_size(self) -> int:
        return self.layers[0].weights.shape[2]


def init_model(
    channels: tuple[int, ...] = DEFAULT_CHANNELS,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    residual: bool = True,
    seed: int = 0,
) -> DenoiserModel:
    """Fresh model with uniform weights in +-sqrt(1 / (in_ch * kernel)).

    Biases start at zero. With the residual connection the input and output
    channel counts must match so the skip can be added directly.
    """
    if len(channels) < 2:
        raise ValueError("need at least an input and an output channel count")
    if any(c < 1 for c in channels):
        raise ValueError(f"channel counts must be positive, got {channels}")
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {kernel_size}")
    if residual and channels[0] != channels[-1]:
        raise ValueError(
            f"residual model needs matching input/output channels, got {channels}"
        )
    rng = make_rng(seed)
    layers = []
    for in_ch, out_ch in zip(channels[:-1], channels[1:]):
        bound = np.sqrt(1.0 / (in_ch * kernel_size))
        weights = rng.uniform(-bound, bound, size=(out_ch, in_ch, kernel_size))
        layers.append(Conv1dLayer(weights=weights, bias=np.zeros(out_ch)))
    return DenoiserModel(layers=layers, residual=residual)


def clone_model(model: DenoiserModel) -> DenoiserModel:
    """Deep copy of weights, biases, and metadata."""
    layers = [
        Conv1dLayer(weights=l.weights.copy(), bias=l.bias.copy())
        for l in model.layers
    ]
    return DenoiserModel(
        layers=layers,
        residual=model.residual,
        training_meta=dict(model.training_meta),
    )


def _to_channels(lines: np.ndarray) -> np.ndarray:
    """(B, L) complex -> (B, L, 2) float64 with real/imag as channels."""
    out = np.empty(lines.shape + (2,), dtype=np.float64)
    out[..., 0] = lines.real
    out[..., 1] = lines.imag
    return out


def _from_channels(channels: np.ndarray) -> np.ndarray:
    """(B, L, 2) float64 -> (B, L) complex128."""
    return channels[..., 0] + 1j * channels[..., 1]


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    """Zero-pad the length axis of a (B, L, C) buffer on both sides."""
    if pad == 0:
        return x.copy()
    b, length, ch = x.shape
    out = np.zeros((b, length + 2 * pad, ch), dtype=np.float64)
    out[:, pad : pad + length, :] = x
    return out


def _conv_forward(
    x_pad: np.ndarray, kio: np.ndarray, bias: np.ndarray, length: int
) -> np.ndarray:
    """Convolve a padded buffer with taps ``kio`` of shape (k, in_ch, out_ch).

    Returns a padded buffer of the same length layout with pad rows zeroed
    and the bias added on the valid region only.
    """
    b, lp, _ = x_pad.shape
    k, _, out_ch = kio.shape
    p = k // 2
    xf = x_pad.reshape(b * lp, -1)
    n = b * lp - 2 * p
    zf = np.zeros((b * lp, out_ch), dtype=np.float64)
    acc = zf[p : p + n]
    for kk in range(k):
        acc += xf[kk : kk + n] @ kio[kk]
    z = zf.reshape(b, lp, out_ch)
    z[:, :p, :] = 0.0
    z[:, p + length :, :] = 0.0
    z[:, p : p + length, :] += bias
    return z


def _conv_backward(
    x_pad: np.ndarray, kio: np.ndarray, g_pad: np.ndarray, length: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of one convolution given upstream gradient on its output.

    ``g_pad`` must have zero pad rows. Returns (dW in (k, in, out) layout,
    db, dX as a padded buffer with pad rows zeroed).
    """
    b, lp, in_ch = x_pad.shape
    k, _, out_ch = kio.shape
    p = k // 2
    n = b * lp - 2 * p
    xf = x_pad.reshape(b * lp, in_ch)
    gf = g_pad.reshape(b * lp, out_ch)
    g_valid = gf[p : p + n]
    dw_kio = np.empty((k, in_ch, out_ch), dtype=np.float64)
    for kk in range(k):
        dw_kio[kk] = xf[kk : kk + n].T @ g_valid
    db = g_valid.sum(axis=0)
    dxf = np.zeros((b * lp, in_ch), dtype=np.float64)
    for kk in range(k):
        dxf[kk : kk + n] += g_valid @ kio[kk].T
    dx = dxf.reshape(b, lp, in_ch)
    dx[:, :p, :] = 0.0
    dx[:, p + length :, :] = 0.0
    return dw_kio, db, dx


def _forward_cached(model: DenoiserModel, x: np.ndarray, keep_cache: bool):
    """Run the network on (B, L, C) channels; optionally keep buffers for
    backprop. Returns (output (B, L, C_out), cache or None)."""
    _, length, _ = x.shape
    p = model.kernel_size // 2
    a_pad = _pad(x, p)
    inputs = [a_pad]
    masks = []
    n_layers = model.n_layers
    for i, layer in enumerate(model.layers):
        kio = np.ascontiguousarray(layer.weights.transpose(2, 1, 0))
        z = _conv_forward(a_pad, kio, layer.bias, length)
        if i < n_layers - 1:
            if keep_cache:
                masks.append(z > 0.0)
            np.maximum(z, 0.0, out=z)
        a_pad = z
        if keep_cache and i < n_layers - 1:
            inputs.append(a_pad)
    out = a_pad[:, p : p + length, :].copy()
    if model.residual:
        out += x
    cache = (inputs, masks) if keep_cache else None
    return out, cache


def _backward(model: DenoiserModel, cache, dout: np.ndarray):
    """Parameter gradients for every layer, last to first.

    ``dout`` is the loss gradient on the network output before the residual
    skip is peeled off; since the skip only touches the input, the layer
    gradients are unaffected by it.
    """
    inputs, masks = cache
    b, length, out_ch = dout.shape
    p = model.kernel_size // 2
    lp = length + 2 * p
    g_pad = np.zeros((b, lp, out_ch), dtype=np.float64)
    g_pad[:, p : p + length, :] = dout
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * model.n_layers  # type: ignore[list-item]
    for i in range(model.n_layers - 1, -1, -1):
        layer = model.layers[i]
        kio = np.ascontiguousarray(layer.weights.transpose(2, 1, 0))
        dw_kio, db, dx_pad = _conv_backward(inputs[i], kio, g_pad, length)
        grads[i] = (np.ascontiguousarray(dw_kio.transpose(2, 1, 0)), db)
        if i > 0:
            dx_pad *= masks[i - 1]
            g_pad = dx_pad
    return grads


def denoise_batch(model: DenoiserModel, lines: np.ndarray) -> np.ndarray:
    """Denoise a (B, L) batch of complex lines."""
    lines = np.asarray(lines, dtype=np.complex128)
    if lines.ndim != 2:
        raise ValueError(f"expected a 2D batch of lines, got shape {lines.shape}")
    expected = model.channels[0]
    if expected != 2:
        raise ValueError(f"model expects {expected} input channels, not complex lines")
    out, _ = _forward_cached(model, _to_channels(lines), keep_cache=False)
    return _from_channels(out)


def denoise_line(model: DenoiserModel, line: np.ndarray) -> np.ndarray:
    """Denoise a single complex line of shape (L,)."""
    line = np.asarray(line, dtype=np.complex128)
    if line.ndim != 1:
        raise ValueError(f"expected a 1D line, got shape {line.shape}")
    return denoise_batch(model, line[None, :])[0]


def apply_denoiser_2d(model: DenoiserModel, image: np.ndarray) -> np.ndarray:
    """Denoise a complex image by averaging a row pass and a column pass.

    Both passes run on the same input (not sequentially), so the result is
    symmetric under transposition of the image.
    """
    image = np.asarray(image, dtype=np.complex128)
    if image.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {image.shape}")
    rows = denoise_batch(model, image)
    cols = denoise_batch(model, image.T).T
    return 0.5 * (rows + cols)
