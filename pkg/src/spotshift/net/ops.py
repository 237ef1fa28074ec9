"""Dense-array primitives for the forward-pass reference.

Everything operates on single images: feature maps are float64 arrays of shape
(channels, height, width). Convolutions use same padding and stride 1; batch
normalization runs in inference mode against stored statistics. Desk-scale
sizes only, so clarity beats throughput.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BN_EPS = 1e-5


def validate_feature(x: np.ndarray, name: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"{name} must have shape (channels, height, width), got {x.shape}")
    if min(x.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


def conv2d(x: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Same-padded stride-1 convolution; weight is (c_out, c_in, k, k), k odd."""
    x = validate_feature(x)
    c_out, c_in, k, k2 = weight.shape
    if k != k2 or k % 2 == 0:
        raise ValueError(f"kernel must be square with odd side, got {k}x{k2}")
    if x.shape[0] != c_in:
        raise ValueError(f"channel mismatch: input has {x.shape[0]}, kernel expects {c_in}")
    if x.shape[1] < k or x.shape[2] < k:
        raise ValueError(f"spatial size {x.shape[1:]} smaller than kernel {k}")
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(1, 2))
    return np.einsum("cijuv,ocuv->oij", windows, weight, optimize=True)


def depthwise_conv2d(x: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Per-channel same-padded convolution; weight is (channels, k, k)."""
    x = validate_feature(x)
    c, k, k2 = weight.shape
    if k != k2 or k % 2 == 0:
        raise ValueError(f"kernel must be square with odd side, got {k}x{k2}")
    if x.shape[0] != c:
        raise ValueError(f"channel mismatch: input has {x.shape[0]}, kernel expects {c}")
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(1, 2))
    return np.einsum("cijuv,cuv->cij", windows, weight, optimize=True)


def pointwise_conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """1x1 convolution (channel mixing); weight is (c_out, c_in)."""
    x = validate_feature(x)
    if weight.ndim != 2:
        raise ValueError(f"pointwise weight must be 2-D, got shape {weight.shape}")
    if x.shape[0] != weight.shape[1]:
        raise ValueError(f"channel mismatch: input has {x.shape[0]}, kernel expects {weight.shape[1]}")
    out = np.tensordot(weight, x, axes=([1], [0]))
    if bias is not None:
        out = out + bias[:, None, None]
    return out


def batchnorm(
    x: np.ndarray,
    scale: np.ndarray,
    shift: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
) -> np.ndarray:
    """Inference-mode normalization with stored statistics (eps = 1e-5)."""
    if np.any(var <= 0):
        raise ValueError("batch-norm variance must be positive")
    inv = 1.0 / np.sqrt(var + BN_EPS)
    return (x - mean[:, None, None]) * (scale * inv)[:, None, None] + shift[:, None, None]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def avg_downsample(x: np.ndarray, factor: int) -> np.ndarray:
    """Non-overlapping mean pooling with kernel = stride = factor."""
    x = validate_feature(x)
    if factor < 1:
        raise ValueError(f"downsample factor must be >= 1, got {factor}")
    c, h, w = x.shape
    if h % factor or w % factor:
        raise ValueError(f"spatial size {h}x{w} not divisible by factor {factor}")
    return x.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


def _up2_axis_indices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Neighbour indices and blend weight for 2x bilinear scaling of one axis.

    Output position j samples source coordinate (j + 0.5) / 2 - 0.5 with edge
    clamping (align_corners = False convention).
    """
    src = (np.arange(2 * n) + 0.5) / 2.0 - 0.5
    lo = np.floor(src).astype(np.int64)
    t = src - lo
    lo_c = np.clip(lo, 0, n - 1)
    hi_c = np.clip(lo + 1, 0, n - 1)
    return lo_c, hi_c, t


def bilinear_upsample2(x: np.ndarray) -> np.ndarray:
    """Double both spatial dimensions with bilinear interpolation."""
    x = validate_feature(x)
    _, h, w = x.shape
    lo, hi, t = _up2_axis_indices(h)
    rows = x[:, lo, :] * (1.0 - t)[None, :, None] + x[:, hi, :] * t[None, :, None]
    lo, hi, t = _up2_axis_indices(w)
    return rows[:, :, lo] * (1.0 - t)[None, None, :] + rows[:, :, hi] * t[None, None, :]


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2-D matrix, shifted by the row maximum."""
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = validate_feature(a, "first input")
    b = validate_feature(b, "second input")
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"spatial mismatch: {a.shape[1:]} vs {b.shape[1:]}")
    return np.concatenate([a, b], axis=0)
