"""Evaluation metrics for predicted foreground maps.

Implements the four community-standard scores used to benchmark camouflaged /
salient object segmentation: mean absolute error, structure measure (alpha =
0.5), mean enhanced-alignment measure over the 8-bit threshold sweep, and the
boundary-aware weighted F-measure (beta^2 = 1). Scores are computed per image
in double precision and averaged unweighted over a directory.

Conventions that the published definitions leave open are pinned here so that
results are reproducible bit for bit:

- enhanced alignment sweeps thresholds k/255 for k = 1..255; level 0 would
  binarize every prediction to all-foreground and carries no information.
- scores divide by the pixel count, keeping every metric inside [0, 1] and
  letting a perfect prediction score exactly 1.
- weighted F propagates errors from the nearest foreground pixel; ties are
  broken by the smallest row-major index.
- denominators that can only vanish in degenerate branches are guarded by
  explicit branches instead of additive epsilons, again so that perfect
  predictions score exactly 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve, distance_transform_edt

from .imgio import read_mask, read_prediction

__all__ = [
    "MetricReport",
    "ImageScore",
    "DirectoryReport",
    "PairingError",
    "mae",
    "s_measure",
    "e_measure",
    "weighted_f",
    "evaluate_pair",
    "evaluate_directory",
    "report_to_csv",
    "report_to_json",
]


class PairingError(ValueError):
    """No usable prediction/ground-truth pairs."""


@dataclass(frozen=True)
class MetricReport:
    """Aggregate scores over ``count`` images."""

    s_measure: float
    e_measure: float
    weighted_f: float
    mae: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("aggregate reports need at least one image")
        for name in ("s_measure", "e_measure", "weighted_f", "mae"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of range: {value}")


@dataclass(frozen=True)
class ImageScore:
    name: str
    s_measure: float
    e_measure: float
    weighted_f: float
    mae: float
    empty_gt: bool = False


@dataclass(frozen=True)
class DirectoryReport:
    images: tuple[ImageScore, ...]
    aggregate: MetricReport
    skipped: tuple[tuple[str, str], ...] = ()
    missing_ground_truth: tuple[str, ...] = ()
    missing_predictions: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        """True when every paired image was evaluated."""
        return not self.skipped


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.ndim != 2 or gt.ndim != 2:
        raise ValueError("prediction and mask must be 2-D arrays")
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs mask {gt.shape}")
    if not np.isin(gt, (0, 1)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    if pred.min() < 0.0 or pred.max() > 1.0:
        raise ValueError("prediction values must lie in [0, 1]")
    return pred, gt.astype(np.float64)


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean absolute error between a prediction and a binary mask."""
    pred, gt = _check_pair(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def _object_part(values: np.ndarray) -> float:
    x = float(values.mean())
    sigma = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma)


def _ssim_block(p: np.ndarray, g: np.ndarray) -> float:
    n = p.size
    if n == 0:
        return 1.0
    x = float(p.mean())
    y = float(g.mean())
    if n <= 1:
        sigma_x = sigma_y = sigma_xy = 0.0
    else:
        sigma_x = float(np.sum((p - x) ** 2)) / (n - 1)
        sigma_y = float(np.sum((g - y) ** 2)) / (n - 1)
        sigma_xy = float(np.sum((p - x) * (g - y))) / (n - 1)
    alpha = 4 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0:
        return alpha / beta
    if beta == 0:
        return 1.0
    return 0.0


def s_measure(pred: np.ndarray, gt: np.ndarray) -> float:
    """Structure measure: 0.5 * object similarity + 0.5 * region similarity.

    Degenerate masks follow the canonical rules: an all-background mask scores
    1 - mean(pred), an all-foreground mask scores mean(pred).
    """
    pred, gt = _check_pair(pred, gt)
    y = float(gt.mean())
    if y == 0.0:
        return 1.0 - float(pred.mean())
    if y == 1.0:
        return float(pred.mean())

    fg = pred[gt == 1]
    bg = 1.0 - pred[gt == 0]
    s_object = y * _object_part(fg) + (1 - y) * _object_part(bg)

    rows, cols = np.nonzero(gt)
    h, w = gt.shape
    cy = int(np.round(rows.mean())) + 1
    cx = int(np.round(cols.mean())) + 1
    area = h * w
    w1 = cx * cy / area
    w2 = cy * (w - cx) / area
    w3 = (h - cy) * cx / area
    w4 = 1 - w1 - w2 - w3
    s_region = (
        w1 * _ssim_block(pred[:cy, :cx], gt[:cy, :cx])
        + w2 * _ssim_block(pred[:cy, cx:], gt[:cy, cx:])
        + w3 * _ssim_block(pred[cy:, :cx], gt[cy:, :cx])
        + w4 * _ssim_block(pred[cy:, cx:], gt[cy:, cx:])
    )
    return max(0.0, 0.5 * s_object + 0.5 * s_region)


def _enhanced_phi(dgt: np.ndarray, dfm: np.ndarray) -> np.ndarray:
    xi = 2.0 * dgt * dfm / (dgt * dgt + dfm * dfm)
    return (xi + 1.0) ** 2 / 4.0


def e_measure(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean enhanced-alignment measure over the 255 positive 8-bit levels.

    Each threshold binarizes the prediction with ``pred >= k/255``. Binary
    maps make the alignment matrix piecewise constant over the four
    (prediction, mask) pixel classes, so each threshold reduces to class
    counts obtained from one sort of the prediction.
    """
    pred, gt = _check_pair(pred, gt)
    n = gt.size
    n_fg = int(gt.sum())
    thresholds = np.arange(1, 256, dtype=np.float64) / 255.0

    pred_sorted = np.sort(pred, axis=None)
    pf = (n - np.searchsorted(pred_sorted, thresholds, side="left")).astype(np.float64)

    if n_fg == 0:
        scores = (n - pf) / n
    elif n_fg == n:
        scores = pf / n
    else:
        fg_sorted = np.sort(pred[gt == 1], axis=None)
        pf_gf = (n_fg - np.searchsorted(fg_sorted, thresholds, side="left")).astype(np.float64)
        pf_gb = pf - pf_gf
        pb_gf = n_fg - pf_gf
        pb_gb = n - pf - pb_gf

        mean_fm = pf / n
        mean_gt = n_fg / n
        dgt_f, dgt_b = 1.0 - mean_gt, -mean_gt
        dfm_f, dfm_b = 1.0 - mean_fm, -mean_fm

        scores = (
            pf_gf * _enhanced_phi(dgt_f, dfm_f)
            + pf_gb * _enhanced_phi(dgt_b, dfm_f)
            + pb_gf * _enhanced_phi(dgt_f, dfm_b)
            + pb_gb * _enhanced_phi(dgt_b, dfm_b)
        ) / n
    return float(np.mean(scores))


def _gauss_kernel(size: int = 7, sigma: float = 5.0) -> np.ndarray:
    half = (size - 1) // 2
    yy, xx = np.mgrid[-half : half + 1, -half : half + 1]
    k = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    return k / k.sum()


def _nearest_foreground_index(gt: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Row-major linear index of the nearest foreground pixel, per background pixel.

    ``dist`` must be the exact Euclidean distance transform of the background.
    Candidates are enumerated from the lattice decompositions of the squared
    distance, so the tie-break (smallest row-major index) is exact.
    """
    h, w = gt.shape
    gt_flat = gt.ravel()
    bg_r, bg_c = np.nonzero(gt == 0)
    s_all = np.rint(dist[bg_r, bg_c] ** 2).astype(np.int64)
    sentinel = np.iinfo(np.int64).max
    best = np.full(bg_r.size, sentinel, dtype=np.int64)
    for s in np.unique(s_all):
        sel = np.nonzero(s_all == s)[0]
        rr0, cc0 = bg_r[sel], bg_c[sel]
        group_best = np.full(sel.size, sentinel, dtype=np.int64)
        r_max = math.isqrt(int(s))
        for dr in range(-r_max, r_max + 1):
            rem = int(s) - dr * dr
            dc_mag = math.isqrt(rem)
            if dc_mag * dc_mag != rem:
                continue
            for dc in {-dc_mag, dc_mag}:
                rr, cc = rr0 + dr, cc0 + dc
                ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
                lin = np.where(ok, rr * w + cc, 0)
                hit = ok & (gt_flat[lin] == 1)
                cand = np.where(hit, lin, sentinel)
                np.minimum(group_best, cand, out=group_best)
        if (group_best == sentinel).any():
            raise RuntimeError("distance transform inconsistent with mask")
        best[sel] = group_best
    return best


def weighted_f(pred: np.ndarray, gt: np.ndarray) -> float:
    """Boundary-aware weighted F-measure with beta^2 = 1.

    Errors on the background inherit the error of the nearest foreground pixel
    before a 7x7 gaussian (sigma 5) smoothing; background errors are amplified
    with distance from the foreground. An all-background mask scores 0 by
    definition (callers flag this case in reports).
    """
    pred, gt = _check_pair(pred, gt)
    n_fg = int(gt.sum())
    if n_fg == 0:
        return 0.0

    fg_mask = gt == 1
    dist = distance_transform_edt(~fg_mask)
    E = np.abs(pred - gt)
    Et = E.copy()
    if (~fg_mask).any():
        nearest = _nearest_foreground_index(gt, dist)
        Et[~fg_mask] = E.ravel()[nearest]

    EA = convolve(Et, _gauss_kernel(), mode="constant", cval=0.0)
    min_e_ea = np.where(fg_mask & (EA < E), EA, E)
    B = np.where(fg_mask, 1.0, 2.0 - np.exp(math.log(0.5) / 5.0 * dist))
    Ew = min_e_ea * B

    # the max(0, .) guards absorb 1-ulp negatives from kernel normalisation
    tpw = max(0.0, n_fg - float(np.sum(Ew[fg_mask])))
    fpw = float(np.sum(Ew[~fg_mask]))
    recall = max(0.0, 1.0 - float(np.mean(Ew[fg_mask])))
    precision = tpw / (tpw + fpw) if (tpw + fpw) > 0 else 0.0
    if recall + precision == 0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, name: str = "") -> ImageScore:
    """All four scores for one prediction/mask pair."""
    return ImageScore(
        name=name,
        s_measure=s_measure(pred, gt),
        e_measure=e_measure(pred, gt),
        weighted_f=weighted_f(pred, gt),
        mae=mae(pred, gt),
        empty_gt=bool(np.asarray(gt).sum() == 0),
    )


def _score_one(name: str, pred_path: Path, gt_path: Path) -> ImageScore:
    pred = read_prediction(pred_path)
    gt = read_mask(gt_path)
    if pred.shape != gt.shape:
        raise ValueError(f"size mismatch: prediction {pred.shape} vs mask {gt.shape}")
    return evaluate_pair(pred, gt, name=name)


def evaluate_directory(pred_dir: str | Path, gt_dir: str | Path, threads: int = 1) -> DirectoryReport:
    """Score every same-named PNG pair under two directories.

    Pairs are matched by exact file stem; unmatched files are reported.
    Unreadable files and per-image size mismatches are skipped with a reason
    (mismatched sizes are never resized). Raises :class:`PairingError` when no
    stems match, or :class:`ValueError` when every pair had to be skipped.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    preds = {p.stem: p for p in sorted(pred_dir.glob("*.png"))}
    gts = {p.stem: p for p in sorted(gt_dir.glob("*.png"))}
    common = sorted(set(preds) & set(gts))
    if not common:
        raise PairingError("no paired images")

    def run(name: str):
        try:
            return _score_one(name, preds[name], gts[name])
        except Exception as exc:  # recorded per image; batch runs must not abort
            return (name, str(exc))

    if threads == 1:
        results = [run(name) for name in common]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, common))

    images = tuple(r for r in results if isinstance(r, ImageScore))
    skipped = tuple(r for r in results if not isinstance(r, ImageScore))
    if not images:
        raise ValueError("every image pair was skipped; nothing to aggregate")

    aggregate = MetricReport(
        s_measure=float(np.mean([s.s_measure for s in images])),
        e_measure=float(np.mean([s.e_measure for s in images])),
        weighted_f=float(np.mean([s.weighted_f for s in images])),
        mae=float(np.mean([s.mae for s in images])),
        count=len(images),
    )
    return DirectoryReport(
        images=images,
        aggregate=aggregate,
        skipped=skipped,
        missing_ground_truth=tuple(sorted(set(preds) - set(gts))),
        missing_predictions=tuple(sorted(set(gts) - set(preds))),
    )


_COLUMNS = ("s_measure", "e_measure", "weighted_f", "mae")


def report_to_csv(report: DirectoryReport) -> str:
    """Per-image rows plus a final aggregate row, columns ordered S, E, Fw, MAE."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("name", *_COLUMNS, "note"))
    for img in report.images:
        writer.writerow(
            (img.name, *(f"{getattr(img, c):.12g}" for c in _COLUMNS), "empty-gt" if img.empty_gt else "")
        )
    agg = report.aggregate
    writer.writerow(("aggregate", *(f"{getattr(agg, c):.12g}" for c in _COLUMNS), f"count={agg.count}"))
    return buf.getvalue()


def report_to_json(report: DirectoryReport) -> str:
    agg = report.aggregate
    payload = {
        "images": [
            {
                "name": img.name,
                **{c: getattr(img, c) for c in _COLUMNS},
                "empty_gt": img.empty_gt,
            }
            for img in report.images
        ],
        "aggregate": {**{c: getattr(agg, c) for c in _COLUMNS}, "count": agg.count},
        "skipped": [{"name": name, "reason": reason} for name, reason in report.skipped],
        "missing_ground_truth": list(report.missing_ground_truth),
        "missing_predictions": list(report.missing_predictions),
    }
    return json.dumps(payload, indent=2) + "\n"
