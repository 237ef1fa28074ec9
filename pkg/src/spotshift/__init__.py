"""Shadow-map co-supervision toolkit.

Three pieces: synthesis of shadow-map supervision targets from binary masks
(spotlight-shifted circular dilation), the standard foreground-map evaluation
metrics, and a desk-scale forward-pass reference of the attention/decoder
network with its composite loss.
"""

from .shadow import (
    DilationConfig,
    SpotlightPoint,
    circular_dilate,
    combine_shadow_maps,
    compute_radii,
    extract_edge,
    generate_cosupervision_target,
    resolve_spotlights,
    synthesize_shadow_map,
)
from .metrics import (
    DirectoryReport,
    ImageScore,
    MetricReport,
    PairingError,
    e_measure,
    evaluate_directory,
    evaluate_pair,
    mae,
    s_measure,
    weighted_f,
)
from .net.blocks import ConvBlockParams, ConvUnitParams, ShadowHeadParams, conv_block, shadow_head
from .net.attention import AttentionStageParams, PaaParams, chaotic_mix, paa_stage
from .net.decoder import EncdParams, encd_aggregate, encd_decode
from .net.losses import LossResult, LossWeights, loss_total
from .net.model import ForwardResult, NetConfig, ReferenceNet, make_pyramid
from .net.archive import load_archive, save_archive

__version__ = "0.1.0"

__all__ = [
    "DilationConfig",
    "SpotlightPoint",
    "circular_dilate",
    "combine_shadow_maps",
    "compute_radii",
    "extract_edge",
    "generate_cosupervision_target",
    "resolve_spotlights",
    "synthesize_shadow_map",
    "DirectoryReport",
    "ImageScore",
    "MetricReport",
    "PairingError",
    "e_measure",
    "evaluate_directory",
    "evaluate_pair",
    "mae",
    "s_measure",
    "weighted_f",
    "ConvBlockParams",
    "ConvUnitParams",
    "ShadowHeadParams",
    "conv_block",
    "shadow_head",
    "AttentionStageParams",
    "PaaParams",
    "chaotic_mix",
    "paa_stage",
    "EncdParams",
    "encd_aggregate",
    "encd_decode",
    "LossResult",
    "LossWeights",
    "loss_total",
    "ForwardResult",
    "NetConfig",
    "ReferenceNet",
    "make_pyramid",
    "load_archive",
    "save_archive",
]
