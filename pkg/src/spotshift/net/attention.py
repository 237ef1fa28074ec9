"""Projection-aware channel attention stages.

Each stage fuses the previous stage's output with one backbone level, then
attends over channels: queries come from a chaotic mix (concatenate and
shuffle) of the downsampled shadow-projection feature with the fused feature,
keys and values from the fused feature alone. Attention is transposed
(channel-by-channel, not pixel-by-pixel): per head the softmax runs over an
attention matrix of size (channels-per-head x channels-per-head).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ops import (
    avg_downsample,
    concat_channels,
    depthwise_conv2d,
    pointwise_conv2d,
    softmax_rows,
    validate_feature,
)

STAGE_INDICES = (2, 3, 4)


def make_mix_permutation(n_channels: int, rng: np.random.Generator) -> np.ndarray:
    """Random channel permutation, drawn once and then frozen."""
    if n_channels < 1:
        raise ValueError("need at least one channel to permute")
    return rng.permutation(n_channels)


def chaotic_mix(a: np.ndarray, b: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Concatenate the channels of ``a`` and ``b``, then reorder them by ``perm``.

    Output channel ``j`` is input channel ``perm[j]`` of the concatenation, so
    the multiset of channel planes is preserved exactly.
    """
    stacked = concat_channels(a, b)
    perm = np.asarray(perm)
    n = stacked.shape[0]
    if sorted(perm.tolist()) != list(range(n)):
        raise ValueError(f"permutation must be a bijection on {n} channels")
    return stacked[perm]


@dataclass(frozen=True)
class AttentionStageParams:
    """Kernels and temperature for one attention stage."""

    heads: int
    alpha: float
    kv_point: np.ndarray  # (c_attn, c_fused)
    kv_depth: np.ndarray  # (c_attn, 3, 3)
    q_point: np.ndarray  # (c_attn, c_mixed)
    q_depth: np.ndarray  # (c_attn, 3, 3)
    out_point: np.ndarray  # (c_out, c_attn)
    mix_perm: np.ndarray  # bijection on c_mixed channels

    def __post_init__(self) -> None:
        if self.heads < 1:
            raise ValueError("head count must be >= 1")
        if self.alpha <= 0:
            raise ValueError("attention temperature must be positive")
        c_attn = self.kv_point.shape[0]
        if c_attn % self.heads:
            raise ValueError(f"attention channels {c_attn} not divisible by {self.heads} heads")
        if self.q_point.shape[0] != c_attn or self.out_point.shape[1] != c_attn:
            raise ValueError("query/output projections disagree on attention width")
        c_mixed = self.q_point.shape[1]
        if sorted(np.asarray(self.mix_perm).tolist()) != list(range(c_mixed)):
            raise ValueError(f"mix permutation must be a bijection on {c_mixed} channels")

    @property
    def attn_channels(self) -> int:
        return self.kv_point.shape[0]

    @property
    def fused_channels(self) -> int:
        return self.kv_point.shape[1]

    @property
    def out_channels(self) -> int:
        return self.out_point.shape[0]


@dataclass(frozen=True)
class PaaParams:
    """Attention parameters for stages 2..4 plus the shared head count."""

    stage2: AttentionStageParams
    stage3: AttentionStageParams
    stage4: AttentionStageParams

    def stage(self, i: int) -> AttentionStageParams:
        if i not in STAGE_INDICES:
            raise ValueError(f"stage index must be one of {STAGE_INDICES}, got {i}")
        return {2: self.stage2, 3: self.stage3, 4: self.stage4}[i]

    @property
    def heads(self) -> int:
        return self.stage2.heads


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_attention_stage(
    rng: np.random.Generator,
    heads: int,
    c_prev: int,
    c_x: int,
    c_psi: int,
    c_attn: int,
    c_out: int,
) -> AttentionStageParams:
    c_fused = c_prev + c_x
    c_mixed = c_psi + c_fused
    return AttentionStageParams(
        heads=heads,
        alpha=float(rng.uniform(0.5, 2.0)),
        kv_point=_he_uniform(rng, (c_attn, c_fused), c_fused),
        kv_depth=_he_uniform(rng, (c_attn, 3, 3), 9),
        q_point=_he_uniform(rng, (c_attn, c_mixed), c_mixed),
        q_depth=_he_uniform(rng, (c_attn, 3, 3), 9),
        out_point=_he_uniform(rng, (c_out, c_attn), c_attn),
        mix_perm=make_mix_permutation(c_mixed, rng),
    )


def paa_stage(
    f_prev: np.ndarray,
    x_i: np.ndarray,
    psi: np.ndarray,
    i: int,
    params: PaaParams | AttentionStageParams,
    return_attention: bool = False,
):
    """One attention stage: fuse, project to Q/K/V, attend over channels.

    ``f_prev`` must sit at twice the spatial size of ``x_i``; the shadow
    feature ``psi`` must reach ``x_i``'s size after 2^(i-1)-fold downsampling.
    Returns the refined feature at ``x_i``'s spatial size, plus the per-head
    attention matrices when ``return_attention`` is set.
    """
    stage = params.stage(i) if isinstance(params, PaaParams) else params
    f_prev = validate_feature(f_prev, "previous stage feature")
    x_i = validate_feature(x_i, "backbone feature")
    psi = validate_feature(psi, "shadow projection feature")

    down_prev = avg_downsample(f_prev, 2)
    if down_prev.shape[1:] != x_i.shape[1:]:
        raise ValueError(
            f"downsampled previous feature {down_prev.shape[1:]} does not match backbone level {x_i.shape[1:]}"
        )
    fused = concat_channels(down_prev, x_i)
    if fused.shape[0] != stage.fused_channels:
        raise ValueError(
            f"fused feature has {fused.shape[0]} channels, stage expects {stage.fused_channels}"
        )

    psi_down = avg_downsample(psi, 2 ** (i - 1))
    if psi_down.shape[1:] != fused.shape[1:]:
        raise ValueError(
            f"downsampled shadow feature {psi_down.shape[1:]} does not match fused feature {fused.shape[1:]}"
        )

    kv = depthwise_conv2d(pointwise_conv2d(fused, stage.kv_point), stage.kv_depth)
    mixed = chaotic_mix(psi_down, fused, stage.mix_perm)
    q = depthwise_conv2d(pointwise_conv2d(mixed, stage.q_point), stage.q_depth)

    c_attn = stage.attn_channels
    _, h, w = fused.shape
    per_head = c_attn // stage.heads
    q_flat = q.reshape(stage.heads, per_head, h * w)
    k_flat = kv.reshape(stage.heads, per_head, h * w)
    attended = np.empty_like(k_flat)
    attentions = np.empty((stage.heads, per_head, per_head))
    for head in range(stage.heads):
        logits = q_flat[head] @ k_flat[head].T / stage.alpha
        attn = softmax_rows(logits)
        attentions[head] = attn
        attended[head] = attn @ k_flat[head]  # keys double as values

    out = pointwise_conv2d(attended.reshape(c_attn, h, w), stage.out_point)
    if return_attention:
        return out, attentions
    return out
