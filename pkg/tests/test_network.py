"""Network builder, forward graph, report, cost model and weight store."""

import numpy as np
import pytest

from gestureflight import attention, numerics
from gestureflight.network import (
    BlockSpec,
    ManifestError,
    NetConfig,
    ShapeMismatchError,
    StemSpec,
    TruncatedBlobError,
    baseline_config,
    build_network,
    comp_cost,
    default_config,
    expected_weight_shapes,
    forward,
    init_weights,
    layer_count,
    load_weights,
    model_report,
    paper_scale_config,
    save_weights,
)


def tiny_config():
    return NetConfig(
        input_h=8, input_w=8,
        stem=StemSpec(kind="gabor", channels=2, n_orientations=2, wavelengths=(2.0,)),
        blocks=(BlockSpec("spatial", 4, 1), BlockSpec("depthwise", 4, 2)),
        n_classes=3, cbam_reduction=2,
    )


class TestBuilder:
    def test_default_is_19_layers(self):
        cfg = default_config()
        assert layer_count(cfg) == 19
        net = build_network(cfg)
        assert net.feature_channels == 256
        # stem is baked, not trainable
        assert "stem.kernel" not in net.param_shapes
        assert net.stem_bank.shape == (3, 3, 1, 16)

    def test_baseline_is_28_layers(self):
        cfg = baseline_config()
        assert layer_count(cfg) == 28
        net = build_network(cfg)
        assert "stem.kernel" in net.param_shapes  # trainable conv stem

    def test_paper_scale_keeps_19_layers(self):
        cfg = paper_scale_config()
        assert layer_count(cfg) == 19
        assert (cfg.input_h, cfg.input_w) == (224, 224)
        net = build_network(cfg)
        assert net.feature_channels == 1024

    def test_rejects_bad_dropout(self):
        cfg = NetConfig(blocks=(BlockSpec("spatial", 16, 1),), dropout_p=1.5)
        with pytest.raises(ValueError, match="dropout_p"):
            build_network(cfg)

    def test_rejects_unknown_block_kind(self):
        cfg = NetConfig(blocks=(BlockSpec("dense", 16, 1),))
        with pytest.raises(ValueError, match="kind"):
            build_network(cfg)

    def test_rejects_cbam_indivisible_width(self):
        cfg = NetConfig(blocks=(BlockSpec("spatial", 12, 1),), cbam_reduction=8)
        with pytest.raises(ValueError, match="divisible"):
            build_network(cfg)

    def test_trainable_param_count_by_hand(self):
        # stem(gabor, 2ch) + one spatial block 2->4 + FC, reduction 2, k=3
        cfg = NetConfig(
            input_h=8, input_w=8,
            stem=StemSpec(kind="gabor", channels=2, n_orientations=2, wavelengths=(2.0,)),
            blocks=(BlockSpec("spatial", 4, 1),),
            n_classes=3, cbam_reduction=2,
        )
        rep = model_report(build_network(cfg))
        stem_part = 2 + 2 + (2 * 1 + 1 + 1 * 2 + 2 + 7 * 7 * 2 * 1)  # bn + cbam(C=2,r=2)
        block_part = (3 * 2 * 4) * 2 + 4 + 4 + (4 * 2 + 2 + 2 * 4 + 4 + 98)  # col+row, bn, cbam
        fc_part = 4 * 3 + 3
        assert rep.trainable_params == stem_part + block_part + fc_part
        # fixed: gabor kernels + bn statistics
        assert rep.fixed_params == 3 * 3 * 1 * 2 + (2 + 2) + (4 + 4)
        assert rep.model_size_bytes == 4 * (rep.trainable_params + rep.fixed_params)


class TestForward:
    def test_tiny_net_matches_hand_composed_graph(self):
        cfg = tiny_config()
        net = build_network(cfg)
        w = init_weights(net, seed=1)
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 1, (8, 8, 1))
        got = forward(net, img, w)

        def gate(x, name):
            x = numerics.batchnorm_inference(x, w[f"{name}.bn.gamma"], w[f"{name}.bn.beta"],
                                             w[f"{name}.bn.mean"], w[f"{name}.bn.var"])
            x = numerics.swish(x)
            cb = attention.CbamWeights(w[f"{name}.cbam.w1"], w[f"{name}.cbam.b1"],
                                       w[f"{name}.cbam.w2"], w[f"{name}.cbam.b2"],
                                       w[f"{name}.cbam.spatial"])
            return attention.apply_cbam(x, cb)

        x = numerics.conv2d(img, net.stem_bank)
        x = gate(x, "stem")
        x = numerics.spatial_separable_conv(x, w["block0.col"], w["block0.row"], 1)
        x = gate(x, "block0")
        x = numerics.depthwise_separable_conv(x, w["block1.dw"], w["block1.pw"], 2)
        x = gate(x, "block1")
        want = numerics.softmax(numerics.global_avg_pool(x) @ w["fc.weight"] + w["fc.bias"])
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_stem_equals_direct_bank_convolution(self):
        net = build_network(tiny_config())
        rng = np.random.default_rng(3)
        img = rng.uniform(0, 1, (8, 8, 1))
        direct = numerics.conv2d(img, net.stem_bank, stride=1, padding="same")
        from gestureflight.gabor import gabor_bank
        bank = gabor_bank(n_orientations=2, wavelengths=(2.0,))
        np.testing.assert_allclose(direct, numerics.conv2d(img, bank), atol=1e-12)

    def test_default_forward_is_deterministic_probability(self):
        net = build_network(default_config())
        w = init_weights(net, seed=0)
        rng = np.random.default_rng(4)
        img = rng.uniform(0, 1, (32, 32, 1))
        p1 = forward(net, img, w)
        p2 = forward(net, img, w)
        assert p1.shape == (10,)
        np.testing.assert_array_equal(p1, p2)
        assert abs(p1.sum() - 1.0) < 1e-9
        assert (p1 >= 0).all()

    def test_rejects_missing_and_unknown_weights(self):
        net = build_network(tiny_config())
        w = init_weights(net)
        img = np.zeros((8, 8, 1))
        broken = dict(w)
        del broken["fc.bias"]
        with pytest.raises(ValueError, match="fc.bias"):
            forward(net, img, broken)
        extra = dict(w)
        extra["block9.dw"] = np.zeros(3)
        with pytest.raises(ValueError, match="block9.dw"):
            forward(net, img, extra)

    def test_rejects_wrong_image_shape(self):
        net = build_network(tiny_config())
        with pytest.raises(ValueError, match="shape"):
            forward(net, np.zeros((9, 8, 1)), init_weights(net))


class TestReport:
    def test_totals_equal_sum_of_independent_per_layer_counts(self):
        cfg = default_config()
        net = build_network(cfg)
        rep = model_report(net)
        # independent recount: walk the config, accumulate resolved shapes
        h = w = 32
        c = 1
        total = 0
        specs = [("gabor_fixed", 3, 1, 16)] + [
            ("spatial_separable" if b.kind == "spatial" else "depthwise_separable",
             b.ksize, b.stride, b.out_channels) for b in cfg.blocks]
        for kind, k, stride, out_c in specs:
            cnt = numerics.count_operations(
                numerics.LayerShape(kind, h, w, c, out_c, kernel=k, stride=stride))
            total += cnt.total_ops
            h, w, c = cnt.out_h, cnt.out_w, out_c
        total += c * cfg.n_classes
        assert rep.total_ops_per_inference == total
        assert sum(layer.ops for layer in rep.per_layer) == total

    def test_default_cheaper_than_baseline(self):
        default_ops = model_report(build_network(default_config())).total_ops_per_inference
        baseline_ops = model_report(build_network(baseline_config())).total_ops_per_inference
        assert default_ops < baseline_ops

    def test_layer_counts_in_reports(self):
        assert model_report(build_network(default_config())).layer_count == 19
        assert model_report(build_network(baseline_config())).layer_count == 28


class TestCompCost:
    def test_reference_point(self):
        cost, per_epoch = comp_cost(10, 0.8, 4, 2, windows_process=4, training_epochs=100)
        assert cost == pytest.approx(64.0, abs=1e-12)
        assert per_epoch == pytest.approx(0.6, abs=1e-12)

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValueError, match="training_epochs"):
            comp_cost(10, 0.8, 4, 2, 4, 0)

    def test_negative_resource_rejected(self):
        with pytest.raises(ValueError, match="gpuload"):
            comp_cost(10, -0.8, 4, 2, 4, 100)


class TestWeightStore:
    def test_roundtrip_preserves_forward_bitwise(self, tmp_path):
        net = build_network(tiny_config())
        w = init_weights(net, seed=7)
        path = tmp_path / "w.gfw"
        save_weights(path, w)
        loaded = load_weights(path, expected_weight_shapes(net))
        rng = np.random.default_rng(8)
        img = rng.uniform(0, 1, (8, 8, 1))
        np.testing.assert_array_equal(forward(net, img, w), forward(net, img, loaded))
        for name in w:
            np.testing.assert_array_equal(w[name], loaded[name])

    def test_file_roundtrip_is_byte_identical(self, tmp_path):
        net = build_network(tiny_config())
        w = init_weights(net, seed=9)
        p1, p2 = tmp_path / "a.gfw", tmp_path / "b.gfw"
        save_weights(p1, w)
        save_weights(p2, load_weights(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_corrupt_manifest_detected(self, tmp_path):
        net = build_network(tiny_config())
        path = tmp_path / "w.gfw"
        save_weights(path, init_weights(net))
        blob = path.read_bytes()
        path.write_bytes(b"JUNK" + blob[4:])
        with pytest.raises(ManifestError, match="magic"):
            load_weights(path)
        # entry count lies
        lines = blob.split(b"\n")
        lines[1] = b"999"
        path.write_bytes(b"\n".join(lines))
        with pytest.raises(ManifestError, match="entries"):
            load_weights(path)

    def test_shape_mismatch_detected(self, tmp_path):
        net = build_network(tiny_config())
        path = tmp_path / "w.gfw"
        save_weights(path, init_weights(net))
        shapes = expected_weight_shapes(net)
        shapes["fc.bias"] = (4,)
        with pytest.raises(ShapeMismatchError, match="fc.bias"):
            load_weights(path, shapes)

    def test_truncated_blob_detected(self, tmp_path):
        net = build_network(tiny_config())
        path = tmp_path / "w.gfw"
        save_weights(path, init_weights(net))
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(TruncatedBlobError, match="binary section"):
            load_weights(path)
