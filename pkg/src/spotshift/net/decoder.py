"""Neighbor-connection decoder with an extra high-resolution path.

Aggregation multiplies each pyramid level by upsampled, convolved versions of
its coarser neighbours (the finest level gets its own connection instead of
being discarded); decoding folds the refined levels coarse-to-fine through
upsample/convolve/concatenate fusions into a single-channel map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import ConvBlockParams, conv_block, init_conv_block
from .ops import bilinear_upsample2, concat_channels, sigmoid, validate_feature


@dataclass(frozen=True)
class EncdParams:
    """Conv blocks for aggregation (all 3x3) and decoding (3x3 fusions, 1x1 head).

    The two aggregation blocks applied to the third level (raw and refined)
    carry separate weights.
    """

    agg_from_f4: ConvBlockParams
    agg_from_f3: ConvBlockParams
    agg_from_f3_refined: ConvBlockParams
    agg_from_f2_refined: ConvBlockParams
    fuse1_pre: ConvBlockParams
    fuse1_post: ConvBlockParams
    fuse2_pre: ConvBlockParams
    fuse2_post: ConvBlockParams
    fuse3_pre: ConvBlockParams
    fuse3_post: ConvBlockParams
    head: ConvBlockParams

    def __post_init__(self) -> None:
        if self.head.out_channels != 1 or self.head.kernel_size != 1:
            raise ValueError("decoder head must be a 1x1 block onto one channel")


def init_encd(rng: np.random.Generator, channels: int) -> EncdParams:
    def block(c_in: int, c_out: int, k: int) -> ConvBlockParams:
        return init_conv_block(rng, c_in, c_out, kernel_size=k, iterations=1)

    return EncdParams(
        agg_from_f4=block(channels, channels, 3),
        agg_from_f3=block(channels, channels, 3),
        agg_from_f3_refined=block(channels, channels, 3),
        agg_from_f2_refined=block(channels, channels, 3),
        fuse1_pre=block(channels, channels, 3),
        fuse1_post=block(2 * channels, channels, 3),
        fuse2_pre=block(channels, channels, 3),
        fuse2_post=block(2 * channels, channels, 3),
        fuse3_pre=block(channels, channels, 3),
        fuse3_post=block(2 * channels, channels, 3),
        head=block(channels, 1, 1),
    )


def _check_pyramid(f1: np.ndarray, f2: np.ndarray, f3: np.ndarray, f4: np.ndarray) -> None:
    features = [validate_feature(f, f"level {i}") for i, f in enumerate((f1, f2, f3, f4), start=1)]
    channels = features[0].shape[0]
    for i, f in enumerate(features, start=1):
        if f.shape[0] != channels:
            raise ValueError(f"level {i} has {f.shape[0]} channels, expected {channels}")
    for i in range(3):
        fine, coarse = features[i], features[i + 1]
        if fine.shape[1] != 2 * coarse.shape[1] or fine.shape[2] != 2 * coarse.shape[2]:
            raise ValueError(
                f"level {i + 1} must be twice the size of level {i + 2}: "
                f"{fine.shape[1:]} vs {coarse.shape[1:]}"
            )


def encd_aggregate(
    f1: np.ndarray,
    f2: np.ndarray,
    f3: np.ndarray,
    f4: np.ndarray,
    params: EncdParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Neighbor-connection aggregation over a 4-level pyramid.

    Levels must already be at the decoder channel width, each twice the
    spatial size of the next. Shapes are preserved per level.
    """
    _check_pyramid(f1, f2, f3, f4)
    f4p = f4
    f3p = f3 * bilinear_upsample2(conv_block(f4, params.agg_from_f4))
    f2p = (
        f2
        * bilinear_upsample2(conv_block(f3, params.agg_from_f3))
        * bilinear_upsample2(conv_block(f3p, params.agg_from_f3_refined))
    )
    f1p = f1 * bilinear_upsample2(conv_block(f2p, params.agg_from_f2_refined))
    return f1p, f2p, f3p, f4p


def _fuse(x: np.ndarray, y: np.ndarray, pre: ConvBlockParams, post: ConvBlockParams) -> np.ndarray:
    return conv_block(concat_channels(conv_block(bilinear_upsample2(x), pre), y), post)


def encd_decode(
    f1p: np.ndarray,
    f2p: np.ndarray,
    f3p: np.ndarray,
    f4p: np.ndarray,
    params: EncdParams,
) -> np.ndarray:
    """Fold the refined pyramid coarse-to-fine into a [0, 1] prediction map.

    Returns a 2-D map at the finest level's spatial size: the 1x1 head output
    squashed by the logistic function.
    """
    _check_pyramid(f1p, f2p, f3p, f4p)
    merged = _fuse(f4p, f3p, params.fuse1_pre, params.fuse1_post)
    merged = _fuse(merged, f2p, params.fuse2_pre, params.fuse2_post)
    merged = _fuse(merged, f1p, params.fuse3_pre, params.fuse3_post)
    raw = conv_block(merged, params.head)
    return sigmoid(raw[0])
