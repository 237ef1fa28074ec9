"""Conv block and shadow head contracts."""

import numpy as np
import pytest

from net_oracle import o_conv_block, o_shadow_head
from spotshift.net.blocks import (
    ConvBlockParams,
    ConvUnitParams,
    conv_block,
    init_conv_block,
    init_shadow_head,
    shadow_head,
)


def unit_bn(c_out):
    return dict(
        bn_scale=np.ones(c_out),
        bn_shift=np.zeros(c_out),
        bn_mean=np.zeros(c_out),
        bn_var=np.ones(c_out),
    )


def identity_block(channels):
    """1x1 identity kernels with unit batch-norm statistics."""
    weight = np.eye(channels).reshape(channels, channels, 1, 1)
    return ConvBlockParams(repeats=(ConvUnitParams(weight=weight, **unit_bn(channels)),))


class TestConvBlock:
    def test_identity_composition_on_nonnegative_input(self):
        x = np.abs(np.random.default_rng(0).standard_normal((3, 4, 4)))
        out = conv_block(x, identity_block(3))
        # unit batch-norm still shrinks by 1/sqrt(1 + eps)
        assert np.allclose(out, x, atol=1e-4)

    def test_output_always_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            block = init_conv_block(rng, 3, 5, kernel_size=3, iterations=2)
            x = rng.standard_normal((3, 6, 6)) * 3
            assert conv_block(x, block).min() >= 0.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        block = init_conv_block(rng, 2, 3, kernel_size=3, iterations=2)
        x = rng.standard_normal((2, 4, 4))
        assert np.allclose(conv_block(x, block), o_conv_block(x, block), atol=1e-6)

    def test_spatial_size_preserved(self):
        rng = np.random.default_rng(3)
        block = init_conv_block(rng, 4, 7, kernel_size=3, iterations=3)
        assert conv_block(rng.standard_normal((4, 9, 11)), block).shape == (7, 9, 11)

    def test_channel_mismatch_rejected(self):
        rng = np.random.default_rng(4)
        block = init_conv_block(rng, 4, 4, kernel_size=3, iterations=1)
        with pytest.raises(ValueError, match="channel mismatch"):
            conv_block(rng.standard_normal((3, 5, 5)), block)

    def test_inconsistent_repeat_chain_rejected(self):
        rng = np.random.default_rng(5)
        a = init_conv_block(rng, 2, 3, 3, 1).repeats[0]
        b = init_conv_block(rng, 5, 3, 3, 1).repeats[0]
        with pytest.raises(ValueError, match="channel chain"):
            ConvBlockParams(repeats=(a, b))

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            ConvUnitParams(weight=np.zeros((1, 1, 2, 2)), **unit_bn(1))


class TestShadowHead:
    def test_zero_input_unit_bn_gives_half_map(self):
        feature = ConvBlockParams(
            repeats=tuple(
                ConvUnitParams(weight=np.zeros((2, 2, 3, 3)), **unit_bn(2)) for _ in range(3)
            )
        )
        predict = ConvBlockParams(
            repeats=(ConvUnitParams(weight=np.zeros((1, 2, 1, 1)), **unit_bn(1)),)
        )
        from spotshift.net.blocks import ShadowHeadParams

        params = ShadowHeadParams(feature=feature, predict=predict)
        psi, pred = shadow_head(np.zeros((2, 5, 5)), params)
        assert np.all(psi == 0.0)
        assert np.all(pred == 0.5)

    def test_output_shapes(self):
        rng = np.random.default_rng(6)
        params = init_shadow_head(rng, c_in=4, c_feature=6)
        psi, pred = shadow_head(rng.standard_normal((4, 8, 8)), params)
        assert psi.shape == (6, 8, 8)
        assert pred.shape == (8, 8)
        assert pred.min() >= 0.0 and pred.max() <= 1.0

    def test_matches_composition_oracle(self):
        rng = np.random.default_rng(7)
        params = init_shadow_head(rng, c_in=3, c_feature=4)
        x = rng.standard_normal((3, 6, 6))
        psi, pred = shadow_head(x, params)
        o_psi, o_pred = o_shadow_head(x, params)
        assert np.allclose(psi, o_psi, atol=1e-6)
        assert np.allclose(pred, o_pred, atol=1e-6)

    def test_head_block_shapes_validated(self):
        rng = np.random.default_rng(8)
        from spotshift.net.blocks import ShadowHeadParams

        with pytest.raises(ValueError, match="one channel"):
            ShadowHeadParams(
                feature=init_conv_block(rng, 3, 4, 3, 3),
                predict=init_conv_block(rng, 4, 2, 1, 1),
            )
