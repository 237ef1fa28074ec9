"""Composite training loss with analytic gradients.

The mask branch combines boundary-weighted binary cross-entropy and weighted
IoU; per-pixel weights emphasise pixels whose neighbourhood mean disagrees
with the mask (boundary bands). The shadow branch is plain mean squared error
against the synthesized co-supervision target. Gradients are returned with
respect to both prediction maps so they can be checked against finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

CLAMP_EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Boundary weighting: window of the local mean pool and its amplification."""

    window: int = 31
    factor: float = 5.0

    def __post_init__(self) -> None:
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"pooling window must be odd and >= 1, got {self.window}")
        if self.factor < 0:
            raise ValueError(f"weight factor must be >= 0, got {self.factor}")


@dataclass(frozen=True)
class LossResult:
    total: float
    weighted_bce: float
    weighted_iou: float
    mse: float
    grad_pred_gt: np.ndarray
    grad_pred_shadow: np.ndarray


def boundary_weights(mask: np.ndarray, weights: LossWeights) -> np.ndarray:
    """1 + factor * |window-mean(mask) - mask|; the pool zero-pads past borders."""
    mask = np.asarray(mask, dtype=np.float64)
    pooled = uniform_filter(mask, size=weights.window, mode="constant", cval=0.0)
    return 1.0 + weights.factor * np.abs(pooled - mask)


def _check_map(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def loss_total(
    pred_gt: np.ndarray,
    mask_gt: np.ndarray,
    pred_shadow: np.ndarray,
    shadow_target: np.ndarray,
    weights: LossWeights = LossWeights(),
) -> LossResult:
    """Weighted BCE + weighted IoU on the mask pair, MSE on the shadow pair.

    Mask predictions are clamped to [eps, 1-eps] (eps = 1e-7) before the
    logarithms; the returned gradient is zero where the clamp is active.
    """
    pred_gt = _check_map(pred_gt, "mask prediction")
    mask = _check_map(mask_gt, "ground-truth mask")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("ground-truth mask must be binary")
    pred_shadow = _check_map(pred_shadow, "shadow prediction")
    shadow = _check_map(shadow_target, "shadow target")
    if pred_gt.shape != mask.shape:
        raise ValueError(f"mask pair shape mismatch: {pred_gt.shape} vs {mask.shape}")
    if pred_shadow.shape != shadow.shape:
        raise ValueError(f"shadow pair shape mismatch: {pred_shadow.shape} vs {shadow.shape}")

    w = boundary_weights(mask, weights)
    w_sum = float(w.sum())
    interior = (pred_gt > CLAMP_EPS) & (pred_gt < 1.0 - CLAMP_EPS)
    p = np.clip(pred_gt, CLAMP_EPS, 1.0 - CLAMP_EPS)

    bce_map = -(mask * np.log(p) + (1.0 - mask) * np.log1p(-p))
    weighted_bce = float((w * bce_map).sum() / w_sum)
    grad_bce = w * (-mask / p + (1.0 - mask) / (1.0 - p)) / w_sum

    inter = float((w * p * mask).sum())
    union = float((w * (p + mask)).sum())
    a = inter + 1.0
    b = union - inter + 1.0
    weighted_iou = 1.0 - a / b
    da = w * mask
    db = w * (1.0 - mask)
    grad_iou = -(da * b - a * db) / (b * b)

    grad_pred_gt = np.where(interior, grad_bce + grad_iou, 0.0)

    diff = pred_shadow - shadow
    mse = float(np.mean(diff * diff))
    grad_pred_shadow = 2.0 * diff / diff.size

    return LossResult(
        total=weighted_bce + weighted_iou + mse,
        weighted_bce=weighted_bce,
        weighted_iou=weighted_iou,
        mse=mse,
        grad_pred_gt=grad_pred_gt,
        grad_pred_shadow=grad_pred_shadow,
    )
