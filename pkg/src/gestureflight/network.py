"""Lightweight gesture classification network.

Graph order: a fixed Gabor stem (or a trainable full convolution for the
baseline), spatially separable blocks in the lower layers, depthwise
separable blocks above, global average pooling, dropout (identity at
inference), a fully connected head and softmax. Every block normalizes
with frozen batchnorm statistics, activates with swish and is gated by a
CBAM attention block.

Layer counting treats each convolution stage as one layer: a spatially
separable block is one layer, a depthwise separable block is two (the
depthwise and pointwise stages), the stem and the FC head are one each.
The default desk-scale configuration counts 19 layers; the all-depthwise
baseline counts 28.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import attention, gabor, numerics

BLOCK_KINDS = ("spatial", "depthwise")
STEM_KINDS = ("gabor", "conv")


@dataclass(frozen=True)
class StemSpec:
    kind: str = "gabor"
    channels: int = 16
    ksize: int = 3
    # Gabor bank parameters (ignored for kind="conv")
    n_orientations: int = gabor.DEFAULT_N_ORIENTATIONS
    wavelengths: tuple = gabor.DEFAULT_WAVELENGTHS
    sigma: float = gabor.DEFAULT_SIGMA
    gamma: float = gabor.DEFAULT_GAMMA
    phase: float = gabor.DEFAULT_PHASE
    part: str = "real"


@dataclass(frozen=True)
class BlockSpec:
    kind: str
    out_channels: int
    stride: int = 1
    ksize: int = 3
    cbam: bool = True


@dataclass(frozen=True)
class NetConfig:
    input_h: int = 32
    input_w: int = 32
    input_c: int = 1
    stem: StemSpec = field(default_factory=StemSpec)
    blocks: tuple = ()
    n_classes: int = 10
    dropout_p: float = 0.4
    cbam_reduction: int = 8
    cbam_activation: str = "swish"
    stem_cbam: bool = True


def default_config() -> NetConfig:
    """Desk-scale default: Gabor stem, 3 spatial blocks, 7 depthwise blocks.

    1 (stem) + 3*1 + 7*2 + 1 (FC) = 19 layers. The two width-128 stride-1
    blocks in the upper stack are the repeated pair kept from the wider
    five-deep repetition of the all-depthwise baseline.
    """
    blocks = (
        BlockSpec("spatial", 16, 1),
        BlockSpec("spatial", 32, 2),
        BlockSpec("spatial", 32, 1),
        BlockSpec("depthwise", 64, 2),
        BlockSpec("depthwise", 64, 1),
        BlockSpec("depthwise", 128, 2),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 2),
        BlockSpec("depthwise", 256, 1),
    )
    cfg = NetConfig(blocks=blocks)
    assert layer_count(cfg) == 19
    return cfg


def baseline_config() -> NetConfig:
    """All-depthwise baseline at matched widths with the five-deep repetition.

    1 (conv stem) + 13*2 + 1 (FC) = 28 layers.
    """
    blocks = (
        BlockSpec("depthwise", 16, 1),
        BlockSpec("depthwise", 32, 2),
        BlockSpec("depthwise", 32, 1),
        BlockSpec("depthwise", 64, 2),
        BlockSpec("depthwise", 64, 1),
        BlockSpec("depthwise", 128, 2),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 1),
        BlockSpec("depthwise", 128, 2),
        BlockSpec("depthwise", 256, 1),
    )
    cfg = NetConfig(stem=StemSpec(kind="conv"), blocks=blocks)
    assert layer_count(cfg) == 28
    return cfg


def paper_scale_config() -> NetConfig:
    """Full-resolution variant (224x224 input). Published attributes stop at
    the layer count, so these widths are approximate: the usual mobile-net
    ladder with the five-deep 512 repetition reduced to two layers. Keeps
    the 19-layer structure of the default config.
    """
    blocks = (
        BlockSpec("spatial", 32, 2),
        BlockSpec("spatial", 64, 2),
        BlockSpec("spatial", 128, 1),
        BlockSpec("depthwise", 256, 2),
        BlockSpec("depthwise", 256, 1),
        BlockSpec("depthwise", 512, 2),
        BlockSpec("depthwise", 512, 1),
        BlockSpec("depthwise", 512, 1),
        BlockSpec("depthwise", 1024, 2),
        BlockSpec("depthwise", 1024, 1),
    )
    cfg = NetConfig(input_h=224, input_w=224, blocks=blocks)
    assert layer_count(cfg) == 19
    return cfg


def layer_count(cfg: NetConfig) -> int:
    n = 1  # stem convolution
    for b in cfg.blocks:
        n += 1 if b.kind == "spatial" else 2
    return n + 1  # FC head


@dataclass(frozen=True)
class LayerPlan:
    """One built layer: resolved geometry plus its parameter names."""
    name: str
    spec: object
    in_h: int
    in_w: int
    in_c: int
    out_h: int
    out_w: int
    out_c: int


@dataclass
class Network:
    cfg: NetConfig
    layers: list               # list[LayerPlan], stem then blocks
    param_shapes: dict         # name -> shape tuple, canonical order
    fixed_shapes: dict         # frozen parameters (gabor stem, batchnorm stats)
    stem_bank: np.ndarray | None  # baked Gabor kernels for kind="gabor"

    @property
    def feature_channels(self) -> int:
        return self.layers[-1].out_c


def _validate_config(cfg: NetConfig) -> None:
    if cfg.input_h < 1 or cfg.input_w < 1 or cfg.input_c < 1:
        raise ValueError("input dimensions must be >= 1")
    if cfg.stem.kind not in STEM_KINDS:
        raise ValueError(f"stem kind must be one of {STEM_KINDS}, got {cfg.stem.kind!r}")
    if cfg.n_classes < 2:
        raise ValueError(f"n_classes must be >= 2, got {cfg.n_classes}")
    if not (0.0 <= cfg.dropout_p < 1.0):
        raise ValueError(f"dropout_p must be in [0, 1), got {cfg.dropout_p}")
    if cfg.cbam_activation not in attention.ACTIVATIONS:
        raise ValueError(f"cbam_activation must be one of {attention.ACTIVATIONS}")
    for i, b in enumerate(cfg.blocks):
        if b.kind not in BLOCK_KINDS:
            raise ValueError(f"block {i}: kind must be one of {BLOCK_KINDS}, got {b.kind!r}")
        if b.out_channels < 1 or b.stride < 1:
            raise ValueError(f"block {i}: out_channels and stride must be >= 1")
        if b.ksize % 2 == 0 or b.ksize < 1:
            raise ValueError(f"block {i}: ksize must be odd and >= 1")


def _add_bn_cbam(name: str, channels: int, cfg: NetConfig, with_cbam: bool,
                 params: dict, fixed: dict) -> None:
    params[f"{name}.bn.gamma"] = (channels,)
    params[f"{name}.bn.beta"] = (channels,)
    fixed[f"{name}.bn.mean"] = (channels,)
    fixed[f"{name}.bn.var"] = (channels,)
    if with_cbam:
        if channels % cfg.cbam_reduction != 0:
            raise ValueError(
                f"{name}: {channels} channels not divisible by cbam reduction "
                f"{cfg.cbam_reduction}")
        hidden = channels // cfg.cbam_reduction
        params[f"{name}.cbam.w1"] = (channels, hidden)
        params[f"{name}.cbam.b1"] = (hidden,)
        params[f"{name}.cbam.w2"] = (hidden, channels)
        params[f"{name}.cbam.b2"] = (channels,)
        params[f"{name}.cbam.spatial"] = (attention.SPATIAL_KSIZE, attention.SPATIAL_KSIZE, 2, 1)


def build_network(cfg: NetConfig) -> Network:
    """Resolve layer geometry and the canonical parameter table."""
    _validate_config(cfg)
    params: dict = {}
    fixed: dict = {}
    layers: list = []

    stem = cfg.stem
    stem_bank = None
    if stem.kind == "gabor":
        if cfg.input_c != 1:
            raise ValueError("gabor stem expects single-channel input")
        stem_bank = gabor.gabor_bank(stem.n_orientations, stem.wavelengths, stem.sigma,
                                     stem.gamma, stem.phase, stem.ksize, stem.part)
        if stem_bank.shape[-1] != stem.channels:
            raise ValueError(
                f"stem channels {stem.channels} do not match bank size {stem_bank.shape[-1]}")
        fixed["stem.kernel"] = stem_bank.shape
    else:
        params["stem.kernel"] = (stem.ksize, stem.ksize, cfg.input_c, stem.channels)
    h = numerics.out_size(cfg.input_h, stem.ksize, 1, "same")
    w = numerics.out_size(cfg.input_w, stem.ksize, 1, "same")
    layers.append(LayerPlan("stem", stem, cfg.input_h, cfg.input_w, cfg.input_c,
                            h, w, stem.channels))
    _add_bn_cbam("stem", stem.channels, cfg, cfg.stem_cbam, params, fixed)

    c = stem.channels
    for i, b in enumerate(cfg.blocks):
        name = f"block{i}"
        oh = numerics.out_size(h, b.ksize, b.stride, "same")
        ow = numerics.out_size(w, b.ksize, b.stride, "same")
        if b.kind == "spatial":
            params[f"{name}.col"] = (b.ksize, c, b.out_channels)
            params[f"{name}.row"] = (b.ksize, c, b.out_channels)
        else:
            params[f"{name}.dw"] = (b.ksize, b.ksize, c)
            params[f"{name}.pw"] = (1, 1, c, b.out_channels)
        layers.append(LayerPlan(name, b, h, w, c, oh, ow, b.out_channels))
        _add_bn_cbam(name, b.out_channels, cfg, b.cbam, params, fixed)
        h, w, c = oh, ow, b.out_channels

    params["fc.weight"] = (c, cfg.n_classes)
    params["fc.bias"] = (cfg.n_classes,)
    return Network(cfg=cfg, layers=layers, param_shapes=params,
                   fixed_shapes=fixed, stem_bank=stem_bank)


def init_weights(net: Network, seed: int = 0) -> dict:
    """Seeded random weights (float32-representable values) plus unit batchnorm stats."""
    rng = np.random.default_rng(seed)
    weights: dict = {}
    for name, shape in net.param_shapes.items():
        fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else int(shape[0])
        scale = 1.0 / np.sqrt(max(fan_in, 1))
        if name.endswith(".bn.gamma"):
            w = np.ones(shape)
        elif name.endswith((".bn.beta", ".b1", ".b2", ".bias")):
            w = np.zeros(shape)
        else:
            w = rng.standard_normal(shape) * scale
        weights[name] = w.astype(np.float32).astype(np.float64)
    for name, shape in net.fixed_shapes.items():
        if name.endswith(".bn.mean"):
            weights[name] = np.zeros(shape)
        elif name.endswith(".bn.var"):
            weights[name] = np.ones(shape)
    return weights


def _check_weights(net: Network, weights: dict) -> None:
    expected = dict(net.param_shapes)
    for name, shape in net.fixed_shapes.items():
        if name != "stem.kernel":  # baked into the network, not user-supplied
            expected[name] = shape
    missing = sorted(set(expected) - set(weights))
    if missing:
        raise ValueError(f"missing weights: {', '.join(missing)}")
    unknown = sorted(set(weights) - set(expected))
    if unknown:
        raise ValueError(f"unknown weights: {', '.join(unknown)}")
    for name, shape in expected.items():
        got = np.asarray(weights[name]).shape
        if got != shape:
            raise ValueError(f"weight {name} has shape {got}, expected {shape}")


def _cbam_weights(name: str, weights: dict) -> attention.CbamWeights:
    return attention.CbamWeights(
        w1=np.asarray(weights[f"{name}.cbam.w1"], dtype=np.float64),
        b1=np.asarray(weights[f"{name}.cbam.b1"], dtype=np.float64),
        w2=np.asarray(weights[f"{name}.cbam.w2"], dtype=np.float64),
        b2=np.asarray(weights[f"{name}.cbam.b2"], dtype=np.float64),
        spatial_kernel=np.asarray(weights[f"{name}.cbam.spatial"], dtype=np.float64),
    )


def _bn_swish_cbam(x: np.ndarray, name: str, with_cbam: bool, cfg: NetConfig,
                   weights: dict) -> np.ndarray:
    x = numerics.batchnorm_inference(
        x, weights[f"{name}.bn.gamma"], weights[f"{name}.bn.beta"],
        weights[f"{name}.bn.mean"], weights[f"{name}.bn.var"])
    x = numerics.swish(x)
    if with_cbam:
        x = attention.apply_cbam(x, _cbam_weights(name, weights), cfg.cbam_activation)
    return x


def forward(net: Network, image: np.ndarray, weights: dict) -> np.ndarray:
    """Class probabilities for one image. Deterministic; dropout is identity."""
    cfg = net.cfg
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, np.newaxis]
    if image.shape != (cfg.input_h, cfg.input_w, cfg.input_c):
        raise ValueError(
            f"image shape {image.shape} does not match configured input "
            f"({cfg.input_h}, {cfg.input_w}, {cfg.input_c})")
    _check_weights(net, weights)

    if net.stem_bank is not None:
        x = numerics.conv2d(image, net.stem_bank, stride=1, padding="same")
    else:
        x = numerics.conv2d(image, weights["stem.kernel"], stride=1, padding="same")
    x = _bn_swish_cbam(x, "stem", cfg.stem_cbam, cfg, weights)

    for i, b in enumerate(cfg.blocks):
        name = f"block{i}"
        if b.kind == "spatial":
            x = numerics.spatial_separable_conv(
                x, weights[f"{name}.col"], weights[f"{name}.row"], b.stride, "same")
        else:
            x = numerics.depthwise_separable_conv(
                x, weights[f"{name}.dw"], weights[f"{name}.pw"], b.stride, "same")
        x = _bn_swish_cbam(x, name, b.cbam, cfg, weights)

    v = numerics.global_avg_pool(x)
    # dropout_p applies during training only; inference is the identity
    logits = v @ weights["fc.weight"] + weights["fc.bias"]
    return numerics.softmax(logits)


# ---------------------------------------------------------------------------
# model report


@dataclass(frozen=True)
class LayerOps:
    name: str
    kind: str
    out_h: int
    out_w: int
    out_c: int
    ops: int


@dataclass(frozen=True)
class ModelReport:
    layer_count: int
    trainable_params: int
    fixed_params: int
    total_ops_per_inference: int
    model_size_bytes: int
    per_layer: tuple


def model_report(net: Network) -> ModelReport:
    """Size and operation summary.

    Operation totals cover the convolution stages (via count_operations)
    plus the FC head; normalization, activation and attention arithmetic
    is excluded, identically for every configuration, so comparisons
    between builder outputs stay like for like. Gabor stem weights and
    batchnorm statistics count as fixed parameters.
    """
    cfg = net.cfg
    per_layer = []
    total = 0
    for plan in net.layers:
        if plan.name == "stem":
            kind = "gabor_fixed" if cfg.stem.kind == "gabor" else "full2d"
            k = cfg.stem.ksize
            stride = 1
        elif plan.spec.kind == "spatial":
            kind, k, stride = "spatial_separable", plan.spec.ksize, plan.spec.stride
        else:
            kind, k, stride = "depthwise_separable", plan.spec.ksize, plan.spec.stride
        count = numerics.count_operations(numerics.LayerShape(
            kind, plan.in_h, plan.in_w, plan.in_c, plan.out_c, kernel=k, stride=stride))
        per_layer.append(LayerOps(plan.name, kind, count.out_h, count.out_w,
                                  plan.out_c, count.total_ops))
        total += count.total_ops
    fc_ops = net.feature_channels * cfg.n_classes
    per_layer.append(LayerOps("fc", "full", 1, 1, cfg.n_classes, fc_ops))
    total += fc_ops

    trainable = sum(int(np.prod(s)) for s in net.param_shapes.values())
    fixed = sum(int(np.prod(s)) for s in net.fixed_shapes.values())
    return ModelReport(
        layer_count=layer_count(cfg),
        trainable_params=trainable,
        fixed_params=fixed,
        total_ops_per_inference=total,
        model_size_bytes=4 * (trainable + fixed),
        per_layer=tuple(per_layer),
    )


# ---------------------------------------------------------------------------
# training cost model


def comp_cost(runtime: float, gpuload: float, gpumem: float, data_cores: float,
              windows_process: float, training_epochs: float) -> tuple:
    """Resource cost of a training run and its per-epoch compute cost.

    cost = runtime * gpuload * gpumem * data_cores
    comp_cost = (cost - windows_process) / training_epochs
    """
    for name, v in (("runtime", runtime), ("gpuload", gpuload), ("gpumem", gpumem),
                    ("data_cores", data_cores)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    if training_epochs <= 0:
        raise ValueError(f"training_epochs must be > 0, got {training_epochs}")
    cost = runtime * gpuload * gpumem * data_cores
    return cost, (cost - windows_process) / training_epochs


# ---------------------------------------------------------------------------
# weight store


class WeightStoreError(ValueError):
    """Base class for weight file failures."""


class ManifestError(WeightStoreError):
    """The text manifest is missing, malformed or inconsistent."""


class ShapeMismatchError(WeightStoreError):
    """An entry's declared shape conflicts with the expected parameter table."""


class TruncatedBlobError(WeightStoreError):
    """The binary section ends before a declared blob does."""


MAGIC = b"GFW1"


def save_weights(path: str | os.PathLike, weights: dict) -> None:
    """Write a text manifest (name, dtype, shape, offset) plus raw blobs.

    Blobs are little-endian float32, concatenated in manifest order;
    offsets are relative to the start of the binary section.
    """
    names = sorted(weights)
    manifest = io.StringIO()
    blobs = io.BytesIO()
    offset = 0
    manifest.write(f"{len(names)}\n")
    for name in names:
        arr = np.ascontiguousarray(np.asarray(weights[name], dtype=np.float64),
                                   dtype="<f4")
        dims = "x".join(str(d) for d in arr.shape) if arr.ndim else "1"
        manifest.write(f"{name} float32 {dims} {offset}\n")
        raw = arr.tobytes()
        blobs.write(raw)
        offset += len(raw)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(manifest.getvalue().encode("ascii"))
        fh.write(b"DATA\n")
        fh.write(blobs.getvalue())


def load_weights(path: str | os.PathLike, expected_shapes: dict | None = None) -> dict:
    """Read a weight file back into float64 arrays.

    When expected_shapes is given (e.g. a Network's parameter table plus
    batchnorm statistics), each entry's declared shape is checked against it.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC + b"\n"):
        raise ManifestError("bad magic: not a weight store file")
    body = blob[len(MAGIC) + 1:]
    sep = body.find(b"DATA\n")
    if sep < 0:
        raise ManifestError("manifest not terminated by DATA marker")
    header, data = body[:sep], body[sep + 5:]
    try:
        lines = header.decode("ascii").splitlines()
    except UnicodeDecodeError as exc:
        raise ManifestError(f"manifest is not ascii text: {exc}") from exc
    if not lines:
        raise ManifestError("empty manifest")
    try:
        n_entries = int(lines[0])
    except ValueError as exc:
        raise ManifestError(f"bad entry count line {lines[0]!r}") from exc
    if n_entries != len(lines) - 1:
        raise ManifestError(f"manifest declares {n_entries} entries, found {len(lines) - 1}")

    weights: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 4:
            raise ManifestError(f"line {lineno}: expected 'name dtype shape offset', got {line!r}")
        name, dtype, dims, offset_s = parts
        if dtype != "float32":
            raise ManifestError(f"line {lineno}: unsupported dtype {dtype!r}")
        try:
            shape = tuple(int(d) for d in dims.split("x"))
            offset = int(offset_s)
        except ValueError as exc:
            raise ManifestError(f"line {lineno}: bad shape or offset: {exc}") from exc
        if any(d < 1 for d in shape) or offset < 0:
            raise ManifestError(f"line {lineno}: non-positive shape or offset")
        if expected_shapes is not None:
            if name not in expected_shapes:
                raise ShapeMismatchError(f"unexpected weight {name!r}")
            if shape != tuple(expected_shapes[name]):
                raise ShapeMismatchError(
                    f"weight {name}: file shape {shape} != expected {tuple(expected_shapes[name])}")
        n_bytes = 4 * int(np.prod(shape))
        if offset + n_bytes > len(data):
            raise TruncatedBlobError(
                f"weight {name}: needs bytes [{offset}, {offset + n_bytes}) "
                f"but binary section has {len(data)}")
        arr = np.frombuffer(data, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        weights[name] = arr.reshape(shape).astype(np.float64)
    if expected_shapes is not None:
        missing = sorted(set(expected_shapes) - set(weights))
        if missing:
            raise ShapeMismatchError(f"missing weights: {', '.join(missing)}")
    return weights


def expected_weight_shapes(net: Network) -> dict:
    """Parameter table a stored weight file must satisfy for this network."""
    shapes = dict(net.param_shapes)
    for name, shape in net.fixed_shapes.items():
        if name != "stem.kernel":
            shapes[name] = shape
    return shapes
