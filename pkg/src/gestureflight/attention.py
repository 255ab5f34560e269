"""Convolutional block attention (CBAM): channel gate then spatial gate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import conv2d, global_avg_pool, sigmoid, swish

DEFAULT_REDUCTION = 8
SPATIAL_KSIZE = 7

ACTIVATIONS = ("swish", "relu")


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass
class CbamWeights:
    """Weights of one attention block for feature maps with C channels.

    The channel gate uses a shared two-layer MLP C -> C/r -> C
    (w1: (C, C/r), w2: (C/r, C)); the spatial gate uses a 7x7 convolution
    over the stacked channel-average and channel-max maps.
    """
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    spatial_kernel: np.ndarray  # (7, 7, 2, 1)

    @property
    def channels(self) -> int:
        return self.w1.shape[0]


def validate_cbam_weights(w: CbamWeights) -> None:
    c, hidden = w.w1.shape
    if hidden < 1:
        raise ValueError(f"hidden width must be >= 1, got {hidden}")
    if w.b1.shape != (hidden,):
        raise ValueError(f"b1 must have shape ({hidden},), got {w.b1.shape}")
    if w.w2.shape != (hidden, c):
        raise ValueError(f"w2 must have shape ({hidden}, {c}), got {w.w2.shape}")
    if w.b2.shape != (c,):
        raise ValueError(f"b2 must have shape ({c},), got {w.b2.shape}")
    if w.spatial_kernel.shape != (SPATIAL_KSIZE, SPATIAL_KSIZE, 2, 1):
        raise ValueError(
            f"spatial kernel must be ({SPATIAL_KSIZE}, {SPATIAL_KSIZE}, 2, 1), "
            f"got {w.spatial_kernel.shape}")


def zero_cbam_weights(channels: int, reduction: int = DEFAULT_REDUCTION) -> CbamWeights:
    if reduction < 1:
        raise ValueError(f"reduction must be >= 1, got {reduction}")
    if channels % reduction != 0:
        raise ValueError(f"channels {channels} not divisible by reduction {reduction}")
    hidden = channels // reduction
    return CbamWeights(
        w1=np.zeros((channels, hidden)),
        b1=np.zeros(hidden),
        w2=np.zeros((hidden, channels)),
        b2=np.zeros(channels),
        spatial_kernel=np.zeros((SPATIAL_KSIZE, SPATIAL_KSIZE, 2, 1)),
    )


def _mlp(v: np.ndarray, w: CbamWeights, activation: str) -> np.ndarray:
    act = swish if activation == "swish" else _relu
    return act(v @ w.w1 + w.b1) @ w.w2 + w.b2


def channel_attention(f: np.ndarray, w: CbamWeights, activation: str = "swish") -> np.ndarray:
    """Per-channel gate in (0, 1): sigmoid(MLP(avgpool) + MLP(maxpool))."""
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    validate_cbam_weights(w)
    if f.ndim != 3 or f.shape[2] != w.channels:
        raise ValueError(f"feature map {f.shape} does not match {w.channels} channels")
    avg = global_avg_pool(f)
    mx = f.max(axis=(0, 1))
    return sigmoid(_mlp(avg, w, activation) + _mlp(mx, w, activation))


def spatial_attention(f: np.ndarray, w: CbamWeights) -> np.ndarray:
    """Per-site gate in (0, 1): sigmoid(conv7x7([channel-avg, channel-max]))."""
    validate_cbam_weights(w)
    stacked = np.stack([f.mean(axis=2), f.max(axis=2)], axis=-1)
    raw = conv2d(stacked, w.spatial_kernel, stride=1, padding="same")
    return sigmoid(raw[:, :, 0])


def apply_cbam(f: np.ndarray, w: CbamWeights, activation: str = "swish") -> np.ndarray:
    """Gate the channel dimension, then the spatial dimension of the result."""
    cam = channel_attention(f, w, activation)
    fc = f * cam[np.newaxis, np.newaxis, :]
    sam = spatial_attention(fc, w)
    return fc * sam[:, :, np.newaxis]
