"""Convolution and pointwise primitives for the gesture network.

Conventions used throughout:

* images are float64 arrays of shape (H, W, C), channels last
* convolutions are cross-correlations (no kernel flip)
* kernels are square with odd side length; "same" padding pads zeros
  symmetrically, "valid" keeps fully covered sites only
* stride subsamples output sites anchored at the top-left site
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PADDINGS = ("same", "valid")

# layer kinds understood by count_operations
LAYER_KINDS = ("full2d", "spatial_separable", "depthwise_separable", "gabor_fixed")


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"image must be (H, W, C), got shape {image.shape}")
    if min(image.shape) < 1:
        raise ValueError(f"image extents must be >= 1, got shape {image.shape}")
    return image


def _check_kernel_side(k: int) -> None:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"kernel side must be odd and >= 1, got {k}")


def _check_stride_padding(stride: int, padding: str) -> None:
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if padding not in PADDINGS:
        raise ValueError(f"padding must be one of {PADDINGS}, got {padding!r}")


def _pad_same(image: np.ndarray, kh: int, kw: int) -> np.ndarray:
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    return np.pad(image, ((ph, ph), (pw, pw), (0, 0)))


def out_size(n: int, k: int, stride: int, padding: str) -> int:
    """Output extent along one axis for an n-site input."""
    if padding == "same":
        return -(-n // stride)  # ceil(n / stride)
    m = n - k + 1
    if m < 1:
        raise ValueError(f"kernel side {k} larger than input extent {n} for valid padding")
    return -(-m // stride)


def conv2d(image: np.ndarray, kernels: np.ndarray, stride: int = 1,
           padding: str = "same") -> np.ndarray:
    """Full 2-D convolution. kernels has shape (k, k, C, M) -> output (H', W', M)."""
    image = _check_image(image)
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 4:
        raise ValueError(f"kernels must be (k, k, C, M), got shape {kernels.shape}")
    kh, kw, c_in, _ = kernels.shape
    if kh != kw:
        raise ValueError(f"kernels must be square, got {kh}x{kw}")
    _check_kernel_side(kh)
    _check_stride_padding(stride, padding)
    if c_in != image.shape[2]:
        raise ValueError(f"kernel channels {c_in} do not match image channels {image.shape[2]}")

    if padding == "same":
        image = _pad_same(image, kh, kw)
    elif image.shape[0] < kh or image.shape[1] < kw:
        raise ValueError("image smaller than kernel for valid padding")
    windows = np.lib.stride_tricks.sliding_window_view(image, (kh, kw), axis=(0, 1))
    windows = windows[::stride, ::stride]
    # windows: (H', W', C, kh, kw); kernels: (kh, kw, C, M)
    return np.einsum("xycij,ijcm->xym", windows, kernels, optimize=True)


def spatial_separable_conv(image: np.ndarray, col_kernels: np.ndarray,
                           row_kernels: np.ndarray, stride: int = 1,
                           padding: str = "same") -> np.ndarray:
    """Spatially factored convolution: a k x 1 column pass then a 1 x k row pass.

    col_kernels and row_kernels both have shape (k, C, M); the pair (c, m)
    realizes the rank-1 kernel outer(col[:, c, m], row[:, c, m]). Output
    channels sum over input channels as in conv2d.
    """
    image = _check_image(image)
    col_kernels = np.asarray(col_kernels, dtype=np.float64)
    row_kernels = np.asarray(row_kernels, dtype=np.float64)
    if col_kernels.ndim != 3 or row_kernels.ndim != 3:
        raise ValueError("col/row kernels must be (k, C, M)")
    if col_kernels.shape != row_kernels.shape:
        raise ValueError(f"col {col_kernels.shape} and row {row_kernels.shape} shapes differ")
    k, c_in, _ = col_kernels.shape
    _check_kernel_side(k)
    _check_stride_padding(stride, padding)
    if c_in != image.shape[2]:
        raise ValueError(f"kernel channels {c_in} do not match image channels {image.shape[2]}")

    if padding == "same":
        image = _pad_same(image, k, k)
    elif image.shape[0] < k or image.shape[1] < k:
        raise ValueError("image smaller than kernel for valid padding")
    # column pass, vertical stride only; keep (c, m) pairs separate until the sum
    wins = np.lib.stride_tricks.sliding_window_view(image, k, axis=0)[::stride]
    mid = np.einsum("xyci,icm->xycm", wins, col_kernels, optimize=True)
    # row pass with horizontal stride, then sum over input channels
    wins = np.lib.stride_tricks.sliding_window_view(mid, k, axis=1)[:, ::stride]
    return np.einsum("xycmi,icm->xym", wins, row_kernels, optimize=True)


def depthwise_separable_conv(image: np.ndarray, dw_kernels: np.ndarray,
                             pw_kernels: np.ndarray, stride: int = 1,
                             padding: str = "same") -> np.ndarray:
    """Depthwise spatial pass (k, k, C) followed by a 1x1 pointwise mix (1, 1, C, M)."""
    image = _check_image(image)
    dw_kernels = np.asarray(dw_kernels, dtype=np.float64)
    pw_kernels = np.asarray(pw_kernels, dtype=np.float64)
    if dw_kernels.ndim != 3:
        raise ValueError(f"dw_kernels must be (k, k, C), got shape {dw_kernels.shape}")
    kh, kw, c_in = dw_kernels.shape
    if kh != kw:
        raise ValueError(f"dw kernels must be square, got {kh}x{kw}")
    _check_kernel_side(kh)
    _check_stride_padding(stride, padding)
    if c_in != image.shape[2]:
        raise ValueError(f"kernel channels {c_in} do not match image channels {image.shape[2]}")
    if pw_kernels.ndim != 4 or pw_kernels.shape[:3] != (1, 1, c_in):
        raise ValueError(f"pw_kernels must be (1, 1, {c_in}, M), got shape {pw_kernels.shape}")

    if padding == "same":
        image = _pad_same(image, kh, kw)
    elif image.shape[0] < kh or image.shape[1] < kw:
        raise ValueError("image smaller than kernel for valid padding")
    wins = np.lib.stride_tricks.sliding_window_view(image, (kh, kw), axis=(0, 1))
    wins = wins[::stride, ::stride]
    mid = np.einsum("xycij,ijc->xyc", wins, dw_kernels, optimize=True)
    return np.einsum("xyc,cm->xym", mid, pw_kernels[0, 0], optimize=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    # exp(-logaddexp(0, -x)) is the overflow-safe logistic
    return np.exp(-np.logaddexp(0.0, -x))


def swish(x: np.ndarray) -> np.ndarray:
    """x * sigmoid(x), elementwise."""
    x = np.asarray(x, dtype=np.float64)
    return x * sigmoid(x)


def batchnorm_inference(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                        mean: np.ndarray, var: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Per-channel affine normalization with frozen statistics."""
    x = np.asarray(x, dtype=np.float64)
    gamma, beta = np.asarray(gamma, dtype=np.float64), np.asarray(beta, dtype=np.float64)
    mean, var = np.asarray(mean, dtype=np.float64), np.asarray(var, dtype=np.float64)
    c = x.shape[-1]
    for name, a in (("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)):
        if a.shape != (c,):
            raise ValueError(f"{name} must have shape ({c},), got {a.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("batchnorm input contains non-finite values")
    if np.any(var < 0):
        raise ValueError("variance entries must be >= 0")
    return (x - mean) / np.sqrt(var + eps) * gamma + beta


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """(H, W, C) -> (C,) spatial mean."""
    x = _check_image(x)
    return x.mean(axis=(0, 1))


def softmax(v: np.ndarray) -> np.ndarray:
    """Stable softmax over a 1-D vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"softmax expects a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax input contains non-finite values")
    e = np.exp(v - v.max())
    return e / e.sum()


@dataclass(frozen=True)
class LayerShape:
    """Geometry of one convolutional layer, as consumed by count_operations."""
    kind: str
    in_h: int
    in_w: int
    in_c: int
    out_c: int
    kernel: int = 3
    stride: int = 1
    padding: str = "same"


@dataclass(frozen=True)
class OpCount:
    per_site_ops: int
    stages: int
    out_h: int
    out_w: int
    total_ops: int


def count_operations(layer: LayerShape) -> OpCount:
    """Per-site and total multiply-accumulate positions for one layer.

    per_site_ops follows the usual factored-convolution accounting: the
    kernel-position count of the most expensive stage. For k=3, C=3 this
    gives 27 (full 2-D), 6 (spatial separable, (3x1)+(1x3) in one stage)
    and 9 (depthwise separable, two stages). A fixed Gabor stem costs k*k
    per channel, like a full convolution whose weights are frozen.

    total_ops extends per-site cost by output sites and output channels.
    """
    if layer.kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind {layer.kind!r}")
    k = layer.kernel
    _check_kernel_side(k)
    _check_stride_padding(layer.stride, layer.padding)
    if min(layer.in_h, layer.in_w, layer.in_c, layer.out_c) < 1:
        raise ValueError("layer extents must be >= 1")
    if layer.kind == "full2d" or layer.kind == "gabor_fixed":
        per_site = k * k * layer.in_c
        stages = 1
    elif layer.kind == "spatial_separable":
        per_site = k + k
        stages = 1
    else:  # depthwise_separable: k*k*1 spatial stage, then 1*1*C pointwise stage
        per_site = max(k * k, layer.in_c)
        stages = 2
    oh = out_size(layer.in_h, k, layer.stride, layer.padding)
    ow = out_size(layer.in_w, k, layer.stride, layer.padding)
    total = per_site * oh * ow * layer.out_c
    return OpCount(per_site_ops=per_site, stages=stages, out_h=oh, out_w=ow, total_ops=total)
