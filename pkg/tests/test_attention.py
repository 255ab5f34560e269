"""CBAM gates: shapes, bounds, and a hand-composed reference path."""

import numpy as np
import pytest

from gestureflight.attention import (
    CbamWeights,
    apply_cbam,
    channel_attention,
    spatial_attention,
    zero_cbam_weights,
)
from gestureflight.numerics import conv2d, sigmoid, swish


def random_cbam_weights(channels, reduction, rng):
    hidden = channels // reduction
    return CbamWeights(
        w1=rng.standard_normal((channels, hidden)),
        b1=rng.standard_normal(hidden),
        w2=rng.standard_normal((hidden, channels)),
        b2=rng.standard_normal(channels),
        spatial_kernel=rng.standard_normal((7, 7, 2, 1)),
    )


class TestChannelGate:
    def test_matches_hand_composed_mlp(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((5, 6, 8))
        w = random_cbam_weights(8, 4, rng)
        got = channel_attention(f, w)

        avg = f.mean(axis=(0, 1))
        mx = f.max(axis=(0, 1))

        def mlp(v):
            h = v @ w.w1 + w.b1
            h = h * sigmoid(h)  # swish hidden activation
            return h @ w.w2 + w.b2

        want = sigmoid(mlp(avg) + mlp(mx))
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_relu_hidden_activation_option(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((4, 4, 8))
        w = random_cbam_weights(8, 8, rng)
        got = channel_attention(f, w, activation="relu")

        def mlp(v):
            return np.maximum(v @ w.w1 + w.b1, 0.0) @ w.w2 + w.b2

        want = sigmoid(mlp(f.mean(axis=(0, 1))) + mlp(f.max(axis=(0, 1))))
        np.testing.assert_allclose(got, want, atol=1e-12)
        assert not np.allclose(got, channel_attention(f, w, activation="swish"))

    def test_bounds_open_unit_interval(self):
        rng = np.random.default_rng(2)
        for seed in range(10):
            f = rng.standard_normal((3, 3, 16))
            w = random_cbam_weights(16, 8, np.random.default_rng(seed))
            w = CbamWeights(w.w1 * 0.3, w.b1 * 0.3, w.w2 * 0.3, w.b2 * 0.3, w.spatial_kernel)
            cam = channel_attention(f, w)
            assert ((cam > 0) & (cam < 1)).all()

    def test_rejects_bad_reduction(self):
        with pytest.raises(ValueError, match="divisible"):
            zero_cbam_weights(10, reduction=4)
        with pytest.raises(ValueError, match="reduction"):
            zero_cbam_weights(8, reduction=0)


class TestSpatialGate:
    def test_matches_hand_composed_conv(self):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((9, 7, 4))
        w = random_cbam_weights(4, 2, rng)
        got = spatial_attention(f, w)
        stacked = np.stack([f.mean(axis=2), f.max(axis=2)], axis=-1)
        want = sigmoid(conv2d(stacked, w.spatial_kernel)[:, :, 0])
        assert got.shape == (9, 7)
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestApply:
    def test_zero_weights_quarter_passthrough(self):
        rng = np.random.default_rng(4)
        f = rng.standard_normal((6, 6, 8))
        w = zero_cbam_weights(8)
        # all-zero weights make both gates sigmoid(0) = 0.5
        np.testing.assert_allclose(apply_cbam(f, w), f / 4.0, atol=1e-12)

    def test_sequential_gating_order(self):
        rng = np.random.default_rng(5)
        f = rng.standard_normal((5, 5, 4))
        w = random_cbam_weights(4, 2, rng)
        cam = channel_attention(f, w)
        fc = f * cam[None, None, :]
        want = fc * spatial_attention(fc, w)[:, :, None]
        np.testing.assert_allclose(apply_cbam(f, w), want, atol=1e-12)

    def test_output_magnitude_never_exceeds_input(self):
        rng = np.random.default_rng(6)
        f = rng.standard_normal((4, 4, 8)) * 5
        w = random_cbam_weights(8, 4, rng)
        out = apply_cbam(f, w)
        assert (np.abs(out) <= np.abs(f) + 1e-12).all()

    def test_rejects_channel_mismatch(self):
        w = zero_cbam_weights(8)
        with pytest.raises(ValueError, match="channels"):
            apply_cbam(np.zeros((4, 4, 6)), w)
