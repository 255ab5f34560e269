"""Convolution and pointwise primitives against straight-loop references."""

import numpy as np
import pytest

from gestureflight.numerics import (
    LayerShape,
    batchnorm_inference,
    conv2d,
    count_operations,
    depthwise_separable_conv,
    global_avg_pool,
    out_size,
    softmax,
    spatial_separable_conv,
    swish,
)


def ref_out_size(n, k, stride, padding):
    if padding == "same":
        valid = n  # padded by (k-1)//2 on each side
    else:
        valid = n - k + 1
    count = 0
    i = 0
    while i < valid:
        count += 1
        i += stride
    return count


def ref_conv2d(image, kernels, stride, padding):
    """Nested-loop cross-correlation, the slow way on purpose."""
    h, w, c = image.shape
    kh, kw, _, m = kernels.shape
    if padding == "same":
        p = (kh - 1) // 2
        padded = np.zeros((h + 2 * p, w + 2 * p, c))
        padded[p:p + h, p:p + w] = image
    else:
        padded = image
    oh = ref_out_size(h, kh, stride, padding)
    ow = ref_out_size(w, kw, stride, padding)
    out = np.zeros((oh, ow, m))
    for i in range(oh):
        for j in range(ow):
            for mm in range(m):
                acc = 0.0
                for a in range(kh):
                    for b in range(kw):
                        for cc in range(c):
                            acc += padded[i * stride + a, j * stride + b, cc] * kernels[a, b, cc, mm]
                out[i, j, mm] = acc
    return out


def ref_spatial_separable(image, col_k, row_k, stride, padding):
    """Build the rank-1 full kernels and reuse the loop reference."""
    k, c, m = col_k.shape
    full = np.zeros((k, k, c, m))
    for cc in range(c):
        for mm in range(m):
            full[:, :, cc, mm] = np.outer(col_k[:, cc, mm], row_k[:, cc, mm])
    return ref_conv2d(image, full, stride, padding)


def ref_depthwise_separable(image, dw_k, pw_k, stride, padding):
    h, w, c = image.shape
    kh = dw_k.shape[0]
    # per-channel spatial stage via the loop reference with diagonal kernels
    diag = np.zeros((kh, kh, c, c))
    for cc in range(c):
        diag[:, :, cc, cc] = dw_k[:, :, cc]
    mid = ref_conv2d(image, diag, stride, padding)
    return mid @ pw_k[0, 0]


class TestConv2d:
    @pytest.mark.parametrize("shape,k,stride,padding", [
        ((7, 7, 1), 3, 1, "same"),
        ((8, 6, 3), 3, 1, "valid"),
        ((9, 5, 2), 5, 2, "same"),
        ((10, 11, 3), 3, 2, "valid"),
        ((6, 6, 4), 1, 1, "same"),
        ((12, 7, 2), 3, 3, "same"),
    ])
    def test_matches_loop_reference(self, shape, k, stride, padding):
        rng = np.random.default_rng(hash((shape, k, stride, padding)) % 2**32)
        image = rng.standard_normal(shape)
        kernels = rng.standard_normal((k, k, shape[2], 4))
        got = conv2d(image, kernels, stride=stride, padding=padding)
        want = ref_conv2d(image, kernels, stride, padding)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, atol=1e-9, rtol=0)

    def test_mean_kernel_constant_image(self):
        image = np.full((9, 9, 1), 3.5)
        kernels = np.full((3, 3, 1, 1), 1.0 / 9.0)
        out = conv2d(image, kernels, padding="same")
        # interior sites see the full kernel support
        np.testing.assert_allclose(out[1:-1, 1:-1, 0], 3.5, atol=1e-12)

    def test_linearity_in_image(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 6, 2))
        b = rng.standard_normal((6, 6, 2))
        kern = rng.standard_normal((3, 3, 2, 3))
        lhs = conv2d(2.0 * a + 0.5 * b, kern)
        rhs = 2.0 * conv2d(a, kern) + 0.5 * conv2d(b, kern)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_rejects_even_kernel(self):
        with pytest.raises(ValueError, match="odd"):
            conv2d(np.zeros((5, 5, 1)), np.zeros((2, 2, 1, 1)))

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            conv2d(np.zeros((5, 5, 2)), np.zeros((3, 3, 3, 1)))

    def test_rejects_bad_padding_and_stride(self):
        with pytest.raises(ValueError, match="padding"):
            conv2d(np.zeros((5, 5, 1)), np.zeros((3, 3, 1, 1)), padding="reflect")
        with pytest.raises(ValueError, match="stride"):
            conv2d(np.zeros((5, 5, 1)), np.zeros((3, 3, 1, 1)), stride=0)


class TestSeparable:
    @pytest.mark.parametrize("shape,k,stride,padding", [
        ((7, 7, 2), 3, 1, "same"),
        ((8, 5, 3), 3, 2, "same"),
        ((9, 9, 1), 5, 1, "valid"),
        ((10, 6, 2), 3, 2, "valid"),
    ])
    def test_spatial_matches_rank1_reference(self, shape, k, stride, padding):
        rng = np.random.default_rng(hash((shape, k, stride)) % 2**32)
        image = rng.standard_normal(shape)
        col_k = rng.standard_normal((k, shape[2], 3))
        row_k = rng.standard_normal((k, shape[2], 3))
        got = spatial_separable_conv(image, col_k, row_k, stride=stride, padding=padding)
        want = ref_spatial_separable(image, col_k, row_k, stride, padding)
        np.testing.assert_allclose(got, want, atol=1e-9, rtol=0)

    def test_121_outer_product_equivalence(self):
        # [1 2 1]^T x [1 2 1] must equal its explicit 3x3 outer-product kernel
        rng = np.random.default_rng(3)
        image = rng.standard_normal((8, 8, 1))
        v = np.array([1.0, 2.0, 1.0])
        col_k = v.reshape(3, 1, 1)
        row_k = v.reshape(3, 1, 1)
        full = np.outer(v, v).reshape(3, 3, 1, 1)
        sep = spatial_separable_conv(image, col_k, row_k)
        dense = conv2d(image, full)
        np.testing.assert_allclose(sep, dense, atol=1e-12, rtol=0)

    @pytest.mark.parametrize("shape,k,stride,padding", [
        ((7, 7, 3), 3, 1, "same"),
        ((9, 6, 2), 3, 2, "same"),
        ((8, 8, 4), 3, 1, "valid"),
        ((11, 7, 2), 5, 2, "valid"),
    ])
    def test_depthwise_matches_reference(self, shape, k, stride, padding):
        rng = np.random.default_rng(hash((shape, k, stride, padding, 1)) % 2**32)
        image = rng.standard_normal(shape)
        dw_k = rng.standard_normal((k, k, shape[2]))
        pw_k = rng.standard_normal((1, 1, shape[2], 5))
        got = depthwise_separable_conv(image, dw_k, pw_k, stride=stride, padding=padding)
        want = ref_depthwise_separable(image, dw_k, pw_k, stride, padding)
        np.testing.assert_allclose(got, want, atol=1e-9, rtol=0)

    def test_depthwise_identity_kernels_pass_input_through(self):
        rng = np.random.default_rng(11)
        image = rng.standard_normal((6, 6, 3))
        dw_k = np.zeros((3, 3, 3))
        dw_k[1, 1, :] = 1.0  # center tap only
        pw_k = np.eye(3).reshape(1, 1, 3, 3)
        out = depthwise_separable_conv(image, dw_k, pw_k)
        np.testing.assert_allclose(out, image, atol=1e-12)


class TestPointwise:
    def test_swish_known_values(self):
        assert swish(0.0) == 0.0
        np.testing.assert_allclose(swish(1.0), 1.0 / (1.0 + np.exp(-1.0)), atol=1e-15)
        # large magnitudes stay finite
        assert np.isfinite(swish(np.array([-1e4, 1e4]))).all()
        np.testing.assert_allclose(swish(-1e4), 0.0, atol=1e-12)

    def test_batchnorm_known_case(self):
        x = np.arange(8.0).reshape(2, 2, 2)
        gamma, beta = np.array([2.0, 1.0]), np.array([1.0, 0.0])
        mean, var = np.array([3.0, 0.0]), np.array([4.0, 1.0])
        out = batchnorm_inference(x, gamma, beta, mean, var, eps=0.0)
        want = (x - mean) / np.sqrt(var) * gamma + beta
        np.testing.assert_allclose(out, want, atol=1e-12)

    def test_batchnorm_rejects_bad_inputs(self):
        x = np.zeros((2, 2, 2))
        ones = np.ones(2)
        with pytest.raises(ValueError, match="non-finite"):
            batchnorm_inference(np.full((2, 2, 2), np.nan), ones, ones, ones, ones)
        with pytest.raises(ValueError, match="variance"):
            batchnorm_inference(x, ones, ones, ones, np.array([1.0, -1.0]))

    def test_global_avg_pool(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((5, 4, 3))
        want = np.array([x[:, :, c].mean() for c in range(3)])
        np.testing.assert_allclose(global_avg_pool(x), want, atol=1e-12)

    def test_softmax_properties(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 12)) * rng.uniform(0.1, 50)
            p = softmax(v)
            assert abs(p.sum() - 1.0) < 1e-9
            assert (p >= 0).all()
            np.testing.assert_allclose(softmax(v + 123.456), p, atol=1e-12)

    def test_softmax_uniform_on_constant(self):
        np.testing.assert_allclose(softmax(np.full(10, 3.3)), 0.1, atol=1e-12)

    def test_softmax_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            softmax(np.array([1.0, np.inf]))


class TestOpCounts:
    def test_reference_per_site_counts(self):
        full = count_operations(LayerShape("full2d", 32, 32, 3, 8))
        sep = count_operations(LayerShape("spatial_separable", 32, 32, 3, 8))
        dw = count_operations(LayerShape("depthwise_separable", 32, 32, 3, 8))
        assert (full.per_site_ops, sep.per_site_ops, dw.per_site_ops) == (27, 6, 9)
        assert (full.stages, sep.stages, dw.stages) == (1, 1, 2)

    def test_gabor_fixed_counts_kernel_positions_per_channel(self):
        g = count_operations(LayerShape("gabor_fixed", 32, 32, 1, 16))
        assert g.per_site_ops == 9
        assert g.stages == 1
        assert g.total_ops == 9 * 32 * 32 * 16

    def test_totals_scale_with_sites_and_channels(self):
        a = count_operations(LayerShape("full2d", 16, 16, 4, 8, stride=2))
        assert (a.out_h, a.out_w) == (8, 8)
        assert a.total_ops == (9 * 4) * 8 * 8 * 8

    def test_out_size_matches_enumeration(self):
        for n in range(1, 12):
            for k in (1, 3, 5):
                for s in (1, 2, 3):
                    for pad in ("same", "valid"):
                        if pad == "valid" and n < k:
                            continue
                        assert out_size(n, k, s, pad) == ref_out_size(n, k, s, pad)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            count_operations(LayerShape("dilated", 8, 8, 1, 1))
