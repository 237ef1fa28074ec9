"""Conv/BN/ReLU blocks and the shadow-feature head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ops import batchnorm, conv2d, relu, sigmoid, validate_feature


@dataclass(frozen=True)
class ConvUnitParams:
    """One conv -> batch-norm -> relu repeat."""

    weight: np.ndarray  # (c_out, c_in, k, k)
    bn_scale: np.ndarray
    bn_shift: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray

    def __post_init__(self) -> None:
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3]:
            raise ValueError(f"conv weight must be (c_out, c_in, k, k), got {self.weight.shape}")
        k = self.weight.shape[2]
        if k % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {k}")
        c_out = self.weight.shape[0]
        for name in ("bn_scale", "bn_shift", "bn_mean", "bn_var"):
            arr = getattr(self, name)
            if arr.shape != (c_out,):
                raise ValueError(f"{name} must have shape ({c_out},), got {arr.shape}")
        if np.any(self.bn_var <= 0):
            raise ValueError("batch-norm variance must be positive")

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class ConvBlockParams:
    """A conv/BN/ReLU unit repeated ``iterations`` times with a shared kernel size."""

    repeats: tuple[ConvUnitParams, ...]

    def __post_init__(self) -> None:
        if not self.repeats:
            raise ValueError("a conv block needs at least one repeat")
        k = self.kernel_size
        for i, unit in enumerate(self.repeats):
            if unit.weight.shape[2] != k:
                raise ValueError("all repeats must share one kernel size")
            if i > 0 and unit.in_channels != self.repeats[i - 1].out_channels:
                raise ValueError("repeat channel chain is inconsistent")

    @property
    def kernel_size(self) -> int:
        return self.repeats[0].weight.shape[2]

    @property
    def iterations(self) -> int:
        return len(self.repeats)

    @property
    def in_channels(self) -> int:
        return self.repeats[0].in_channels

    @property
    def out_channels(self) -> int:
        return self.repeats[-1].out_channels


def conv_block(x: np.ndarray, params: ConvBlockParams) -> np.ndarray:
    """Apply (conv -> batch-norm -> relu) for every repeat; preserves H and W.

    Outputs are non-negative by construction of the final rectifier.
    """
    out = validate_feature(x)
    for unit in params.repeats:
        out = relu(batchnorm(conv2d(out, unit.weight), unit.bn_scale, unit.bn_shift, unit.bn_mean, unit.bn_var))
    return out


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_conv_unit(rng: np.random.Generator, c_in: int, c_out: int, kernel_size: int) -> ConvUnitParams:
    return ConvUnitParams(
        weight=_he_uniform(rng, (c_out, c_in, kernel_size, kernel_size), c_in * kernel_size * kernel_size),
        bn_scale=rng.uniform(0.5, 1.5, size=c_out),
        bn_shift=rng.uniform(-0.1, 0.1, size=c_out),
        bn_mean=rng.uniform(-0.1, 0.1, size=c_out),
        bn_var=rng.uniform(0.5, 1.5, size=c_out),
    )


def init_conv_block(
    rng: np.random.Generator, c_in: int, c_out: int, kernel_size: int, iterations: int
) -> ConvBlockParams:
    units = []
    chan = c_in
    for _ in range(iterations):
        units.append(init_conv_unit(rng, chan, c_out, kernel_size))
        chan = c_out
    return ConvBlockParams(repeats=tuple(units))


@dataclass(frozen=True)
class ShadowHeadParams:
    """Shadow projection feature extractor and its 1-channel map predictor."""

    feature: ConvBlockParams  # 3x3, three repeats
    predict: ConvBlockParams  # 1x1, one repeat, single output channel

    def __post_init__(self) -> None:
        if self.predict.out_channels != 1:
            raise ValueError("shadow prediction block must end in one channel")
        if self.predict.in_channels != self.feature.out_channels:
            raise ValueError("prediction block input must match the feature block output")


def init_shadow_head(rng: np.random.Generator, c_in: int, c_feature: int) -> ShadowHeadParams:
    return ShadowHeadParams(
        feature=init_conv_block(rng, c_in, c_feature, kernel_size=3, iterations=3),
        predict=init_conv_block(rng, c_feature, 1, kernel_size=1, iterations=1),
    )


def shadow_head(x1: np.ndarray, params: ShadowHeadParams) -> tuple[np.ndarray, np.ndarray]:
    """Shadow projection feature and predicted shadow map from the finest backbone level.

    Returns ``(feature, prediction)`` where the prediction is a 2-D map in
    [0, 1]: the 1-channel block output squashed by the logistic function.
    """
    feature = conv_block(x1, params.feature)
    raw = conv_block(feature, params.predict)
    return feature, sigmoid(raw[0])
