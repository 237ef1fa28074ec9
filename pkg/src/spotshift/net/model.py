"""Full forward-pass assembly: shadow head, attention stages, decoder.

Parameters are created once from a seed (or loaded from an archive) and are
immutable afterwards; forward passes on distinct inputs may run concurrently.
The backbone itself is out of scope: any pyramid that satisfies the shape
algebra (four levels, each half the spatial size of the previous, finest level
first) can be fed in. A fifth, coarsest-stride-2 level x0 is accepted and
ignored for compatibility with 5-level backbones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import DEFAULT_ATTENTION_HEADS, DEFAULT_DECODER_CHANNELS
from .attention import AttentionStageParams, PaaParams, init_attention_stage, paa_stage
from .blocks import ShadowHeadParams, init_shadow_head, shadow_head
from .decoder import EncdParams, encd_aggregate, encd_decode, init_encd
from .ops import pointwise_conv2d, validate_feature


@dataclass(frozen=True)
class NetConfig:
    backbone_channels: int = 32
    shadow_channels: int = 32
    attn_channels: int = 32
    stage_channels: int = 32
    decoder_channels: int = DEFAULT_DECODER_CHANNELS
    heads: int = DEFAULT_ATTENTION_HEADS
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("backbone_channels", "shadow_channels", "attn_channels", "stage_channels", "decoder_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.heads < 1:
            raise ValueError("heads must be >= 1")


@dataclass(frozen=True)
class PointwiseParams:
    weight: np.ndarray  # (c_out, c_in)
    bias: np.ndarray  # (c_out,)


@dataclass(frozen=True)
class ModelParams:
    shadow: ShadowHeadParams
    paa: PaaParams
    transit: tuple[PointwiseParams, PointwiseParams, PointwiseParams, PointwiseParams]
    encd: EncdParams


@dataclass(frozen=True)
class ForwardResult:
    shadow_feature: np.ndarray
    pred_shadow: np.ndarray
    stage_features: tuple[np.ndarray, np.ndarray, np.ndarray]  # stages 2..4
    transited: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    aggregated: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    pred_mask: np.ndarray


def _init_pointwise(rng: np.random.Generator, c_in: int, c_out: int) -> PointwiseParams:
    bound = np.sqrt(6.0 / c_in)
    return PointwiseParams(
        weight=rng.uniform(-bound, bound, size=(c_out, c_in)),
        bias=rng.uniform(-1.0 / np.sqrt(c_in), 1.0 / np.sqrt(c_in), size=c_out),
    )


def init_model_params(config: NetConfig) -> ModelParams:
    """Seeded parameter construction; fixed creation order keeps it reproducible."""
    rng = np.random.default_rng(config.seed)
    shadow = init_shadow_head(rng, config.backbone_channels, config.shadow_channels)
    stages = []
    c_prev = config.shadow_channels
    for i in (2, 3, 4):
        try:
            stages.append(
                init_attention_stage(
                    rng,
                    heads=config.heads,
                    c_prev=c_prev,
                    c_x=config.backbone_channels,
                    c_psi=config.shadow_channels,
                    c_attn=config.attn_channels,
                    c_out=config.stage_channels,
                )
            )
        except ValueError as exc:
            raise ValueError(f"attention stage {i}: {exc}") from exc
        c_prev = config.stage_channels
    paa = PaaParams(stage2=stages[0], stage3=stages[1], stage4=stages[2])
    transit_in = (config.shadow_channels,) + (config.stage_channels,) * 3
    transit = tuple(_init_pointwise(rng, c, config.decoder_channels) for c in transit_in)
    encd = init_encd(rng, config.decoder_channels)
    return ModelParams(shadow=shadow, paa=paa, transit=transit, encd=encd)


class ReferenceNet:
    """Ties the pieces together for smoke runs, archive round-trips, and tests."""

    def __init__(self, config: NetConfig = NetConfig(), params: ModelParams | None = None):
        self.config = config
        self.params = params if params is not None else init_model_params(config)

    def forward(self, pyramid: Sequence[np.ndarray]) -> ForwardResult:
        """Run the full pass over a feature pyramid ordered finest to coarsest.

        Accepts 4 levels (x1..x4) or 5 (x0 first, ignored).
        """
        if len(pyramid) == 5:
            pyramid = pyramid[1:]
        if len(pyramid) != 4:
            raise ValueError(f"expected a 4-level pyramid (or 5 with x0), got {len(pyramid)} levels")
        x1, x2, x3, x4 = (validate_feature(x, f"pyramid level {i}") for i, x in enumerate(pyramid, start=1))

        psi, pred_shadow = shadow_head(x1, self.params.shadow)
        f_prev = psi
        stage_feats = []
        for i, x_i in zip((2, 3, 4), (x2, x3, x4)):
            f_prev = paa_stage(f_prev, x_i, psi, i, self.params.paa)
            stage_feats.append(f_prev)

        levels = (psi, *stage_feats)
        transited = tuple(
            pointwise_conv2d(f, t.weight, t.bias) for f, t in zip(levels, self.params.transit)
        )
        aggregated = encd_aggregate(*transited, self.params.encd)
        pred_mask = encd_decode(*aggregated, self.params.encd)
        return ForwardResult(
            shadow_feature=psi,
            pred_shadow=pred_shadow,
            stage_features=tuple(stage_feats),
            transited=transited,
            aggregated=aggregated,
            pred_mask=pred_mask,
        )

    # --- parameter import/export -------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        state: dict[str, np.ndarray] = {}

        def put_block(prefix, block):
            for r, unit in enumerate(block.repeats):
                state[f"{prefix}.rep{r}.weight"] = unit.weight
                state[f"{prefix}.rep{r}.bn_scale"] = unit.bn_scale
                state[f"{prefix}.rep{r}.bn_shift"] = unit.bn_shift
                state[f"{prefix}.rep{r}.bn_mean"] = unit.bn_mean
                state[f"{prefix}.rep{r}.bn_var"] = unit.bn_var

        put_block("shadow.feature", self.params.shadow.feature)
        put_block("shadow.predict", self.params.shadow.predict)
        for i in (2, 3, 4):
            stage = self.params.paa.stage(i)
            state[f"paa{i}.alpha"] = np.asarray(stage.alpha)
            state[f"paa{i}.kv_point"] = stage.kv_point
            state[f"paa{i}.kv_depth"] = stage.kv_depth
            state[f"paa{i}.q_point"] = stage.q_point
            state[f"paa{i}.q_depth"] = stage.q_depth
            state[f"paa{i}.out_point"] = stage.out_point
            state[f"paa{i}.mix_perm"] = stage.mix_perm.astype(np.float64)
        for i, t in enumerate(self.params.transit, start=1):
            state[f"transit{i}.weight"] = t.weight
            state[f"transit{i}.bias"] = t.bias
        encd = self.params.encd
        for name in (
            "agg_from_f4",
            "agg_from_f3",
            "agg_from_f3_refined",
            "agg_from_f2_refined",
            "fuse1_pre",
            "fuse1_post",
            "fuse2_pre",
            "fuse2_post",
            "fuse3_pre",
            "fuse3_post",
            "head",
        ):
            put_block(f"encd.{name}", getattr(encd, name))
        return state

    @classmethod
    def from_state_dict(cls, config: NetConfig, state: dict[str, np.ndarray]) -> "ReferenceNet":
        from .blocks import ConvBlockParams, ConvUnitParams

        def get_block(prefix) -> ConvBlockParams:
            units = []
            r = 0
            while f"{prefix}.rep{r}.weight" in state:
                units.append(
                    ConvUnitParams(
                        weight=state[f"{prefix}.rep{r}.weight"],
                        bn_scale=state[f"{prefix}.rep{r}.bn_scale"],
                        bn_shift=state[f"{prefix}.rep{r}.bn_shift"],
                        bn_mean=state[f"{prefix}.rep{r}.bn_mean"],
                        bn_var=state[f"{prefix}.rep{r}.bn_var"],
                    )
                )
                r += 1
            if not units:
                raise ValueError(f"no tensors found under {prefix!r}")
            return ConvBlockParams(repeats=tuple(units))

        shadow = ShadowHeadParams(feature=get_block("shadow.feature"), predict=get_block("shadow.predict"))
        stages = {}
        for i in (2, 3, 4):
            stages[i] = AttentionStageParams(
                heads=config.heads,
                alpha=float(np.asarray(state[f"paa{i}.alpha"]).ravel()[0]),
                kv_point=state[f"paa{i}.kv_point"],
                kv_depth=state[f"paa{i}.kv_depth"],
                q_point=state[f"paa{i}.q_point"],
                q_depth=state[f"paa{i}.q_depth"],
                out_point=state[f"paa{i}.out_point"],
                mix_perm=np.rint(state[f"paa{i}.mix_perm"]).astype(np.int64),
            )
        paa = PaaParams(stage2=stages[2], stage3=stages[3], stage4=stages[4])
        transit = tuple(
            PointwiseParams(weight=state[f"transit{i}.weight"], bias=state[f"transit{i}.bias"])
            for i in (1, 2, 3, 4)
        )
        encd = EncdParams(
            agg_from_f4=get_block("encd.agg_from_f4"),
            agg_from_f3=get_block("encd.agg_from_f3"),
            agg_from_f3_refined=get_block("encd.agg_from_f3_refined"),
            agg_from_f2_refined=get_block("encd.agg_from_f2_refined"),
            fuse1_pre=get_block("encd.fuse1_pre"),
            fuse1_post=get_block("encd.fuse1_post"),
            fuse2_pre=get_block("encd.fuse2_pre"),
            fuse2_post=get_block("encd.fuse2_post"),
            fuse3_pre=get_block("encd.fuse3_pre"),
            fuse3_post=get_block("encd.fuse3_post"),
            head=get_block("encd.head"),
        )
        return cls(config, ModelParams(shadow=shadow, paa=paa, transit=transit, encd=encd))


def make_pyramid(seed: int, channels: int = 32, base_size: int = 32) -> list[np.ndarray]:
    """Seeded stand-in for backbone features: 4 levels, halving from base_size.

    ``base_size`` must be a multiple of 8 and at least 24 so the coarsest
    level still fits a 3x3 kernel.
    """
    if base_size % 8 or base_size < 24:
        raise ValueError("base_size must be a multiple of 8 and >= 24")
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((channels, base_size >> i, base_size >> i)) for i in range(4)]
