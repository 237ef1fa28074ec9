"""Dense-array primitive checks against hand values and loop transcriptions."""

import numpy as np
import pytest

from net_oracle import o_avg_down, o_conv2d, o_depthwise, o_pointwise, o_up2
from spotshift.net.ops import (
    avg_downsample,
    batchnorm,
    bilinear_upsample2,
    concat_channels,
    conv2d,
    depthwise_conv2d,
    pointwise_conv2d,
    relu,
    sigmoid,
    softmax_rows,
    validate_feature,
)


class TestConv:
    def test_identity_1x1(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 5, 5))
        w = np.eye(3).reshape(3, 3, 1, 1)
        assert np.allclose(conv2d(x, w), x)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 4, 4))
        w = rng.standard_normal((3, 2, 3, 3))
        assert np.allclose(conv2d(x, w), o_conv2d(x, w), atol=1e-12)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError, match="channel mismatch"):
            conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)))

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            conv2d(np.zeros((2, 4, 4)), np.zeros((1, 2, 2, 2)))

    def test_spatial_smaller_than_kernel_rejected(self):
        with pytest.raises(ValueError):
            conv2d(np.zeros((1, 2, 2)), np.zeros((1, 1, 3, 3)))

    def test_depthwise_matches_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((4, 5, 6))
        w = rng.standard_normal((4, 3, 3))
        assert np.allclose(depthwise_conv2d(x, w), o_depthwise(x, w), atol=1e-12)

    def test_pointwise_matches_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 3, 3))
        w = rng.standard_normal((2, 4))
        b = rng.standard_normal(2)
        assert np.allclose(pointwise_conv2d(x, w, b), o_pointwise(x, w, b), atol=1e-12)


class TestNormNonlin:
    def test_batchnorm_unit_params_is_identity_at_desk_tolerance(self):
        x = np.random.default_rng(4).standard_normal((2, 3, 3))
        ones = np.ones(2)
        zeros = np.zeros(2)
        out = batchnorm(x, ones, zeros, zeros, ones)
        assert np.allclose(out, x, atol=1e-4)  # off only by the 1e-5 eps shrink

    def test_batchnorm_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            batchnorm(np.zeros((1, 2, 2)), np.ones(1), np.zeros(1), np.zeros(1), np.zeros(1))

    def test_relu_clamps(self):
        assert relu(np.array([-2.0, 0.0, 3.0])).tolist() == [0.0, 0.0, 3.0]

    def test_sigmoid_midpoint_and_symmetry(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5
        x = np.linspace(-30, 30, 13)
        assert np.allclose(sigmoid(x) + sigmoid(-x), 1.0, atol=1e-12)

    def test_softmax_rows_normalised(self):
        m = np.random.default_rng(5).standard_normal((6, 6)) * 50
        rows = softmax_rows(m)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)
        assert (rows >= 0).all()


class TestResampling:
    def test_avg_downsample_matches_oracle(self):
        x = np.random.default_rng(6).standard_normal((3, 8, 8))
        for factor in (1, 2, 4):
            assert np.allclose(avg_downsample(x, factor), o_avg_down(x, factor), atol=1e-12)

    def test_avg_downsample_rejects_indivisible(self):
        with pytest.raises(ValueError):
            avg_downsample(np.zeros((1, 6, 6)), 4)

    def test_upsample_shape_and_oracle(self):
        x = np.random.default_rng(7).standard_normal((2, 4, 5))
        up = bilinear_upsample2(x)
        assert up.shape == (2, 8, 10)
        assert np.allclose(up, o_up2(x), atol=1e-12)

    def test_upsample_constant_is_constant(self):
        x = np.full((1, 3, 3), 0.7)
        assert np.allclose(bilinear_upsample2(x), 0.7, atol=1e-15)

    def test_upsample_known_1d_profile(self):
        # ramp 0,1,2,3 upsampled: edges clamp, interior blends 0.75/0.25
        x = np.arange(4.0).reshape(1, 1, 4)
        up = bilinear_upsample2(x)[0, 0]
        assert np.allclose(up, [0.0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0])


class TestValidation:
    def test_validate_feature_rejects_non_3d(self):
        with pytest.raises(ValueError):
            validate_feature(np.zeros((4, 4)))

    def test_validate_feature_rejects_nan(self):
        x = np.zeros((1, 2, 2))
        x[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            validate_feature(x)

    def test_concat_requires_same_spatial(self):
        with pytest.raises(ValueError, match="spatial mismatch"):
            concat_channels(np.zeros((1, 4, 4)), np.zeros((1, 4, 5)))
