"""Synthetic gesture images, PGM I/O and the correlation oracle classifier.

Ten gesture classes render as distinct stroke glyphs. Domain
randomization perturbs rotation, brightness, additive noise and
background level from a seeded generator, so any (class, seed) pair
reproduces bitwise. The oracle classifier scores normalized
cross-correlation against the clean glyphs and softmaxes the scores;
it is the reference labeller for simulator missions and tests.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .numerics import softmax

N_CLASSES = 10
GLYPH_SIZE = 32
STROKE_HALF_WIDTH = 0.055  # in glyph units
ORACLE_TEMPERATURE = 10.0
MAX_PGM_PIXELS = 16_000_000

CLASS_NAMES = (
    "circle", "bar_v", "bar_h", "diag_down", "diag_up",
    "cross", "x_cross", "corner", "tee", "double_bar",
)

# strokes in unit coordinates, y growing downward; ("seg", x1, y1, x2, y2)
# or ("ring", cx, cy, radius)
_GLYPH_STROKES = {
    0: (("ring", 0.5, 0.5, 0.28),),
    1: (("seg", 0.5, 0.16, 0.5, 0.84),),
    2: (("seg", 0.16, 0.5, 0.84, 0.5),),
    3: (("seg", 0.2, 0.2, 0.8, 0.8),),
    4: (("seg", 0.8, 0.2, 0.2, 0.8),),
    5: (("seg", 0.5, 0.16, 0.5, 0.84), ("seg", 0.16, 0.5, 0.84, 0.5)),
    6: (("seg", 0.2, 0.2, 0.8, 0.8), ("seg", 0.8, 0.2, 0.2, 0.8)),
    7: (("seg", 0.25, 0.18, 0.25, 0.82), ("seg", 0.25, 0.82, 0.82, 0.82)),
    8: (("seg", 0.18, 0.25, 0.82, 0.25), ("seg", 0.5, 0.25, 0.5, 0.82)),
    9: (("seg", 0.18, 0.35, 0.82, 0.35), ("seg", 0.18, 0.65, 0.82, 0.65)),
}


@dataclass(frozen=True)
class DrParams:
    """Domain randomization ranges; each draw samples uniformly per range."""
    rotation_deg: tuple = (0.0, 0.0)
    brightness: tuple = (1.0, 1.0)
    noise_amp: tuple = (0.0, 0.0)
    background: tuple = (0.0, 0.0)
    seed: int = 0


DR_NONE = DrParams()
DR_MISSION = DrParams(rotation_deg=(-5.0, 5.0), brightness=(0.9, 1.1),
                      noise_amp=(0.0, 0.05), background=(0.0, 0.1))
DR_MILD = DrParams(rotation_deg=(-10.0, 10.0), brightness=(0.8, 1.2),
                   noise_amp=(0.0, 0.1), background=(0.0, 0.2))


def _check_class(class_id: int) -> None:
    if not (0 <= int(class_id) < N_CLASSES):
        raise ValueError(f"class_id must be in [0, {N_CLASSES}), got {class_id}")


def _render(class_id: int, size: int, rotation_deg: float,
            center=(0.5, 0.5), scale: float = 1.0) -> np.ndarray:
    """Evaluate the glyph's stroke distance field on the pixel grid.

    Rotation and placement transform the sample coordinates, so there is
    no resampling step: edges stay clean at any angle.
    """
    _check_class(class_id)
    if size < 4:
        raise ValueError(f"size must be >= 4, got {size}")
    half = np.arange(size, dtype=np.float64) + 0.5
    px, py = np.meshgrid(half / size, half / size, indexing="xy")
    rot = math.radians(rotation_deg)
    cx, cy = center
    dx, dy = px - cx, py - cy
    gx = (math.cos(rot) * dx + math.sin(rot) * dy) / scale + 0.5
    gy = (-math.sin(rot) * dx + math.cos(rot) * dy) / scale + 0.5

    d = np.full((size, size), np.inf)
    for stroke in _GLYPH_STROKES[int(class_id)]:
        if stroke[0] == "seg":
            _, x1, y1, x2, y2 = stroke
            ex, ey = x2 - x1, y2 - y1
            norm2 = ex * ex + ey * ey
            t = np.clip(((gx - x1) * ex + (gy - y1) * ey) / norm2, 0.0, 1.0)
            dist = np.hypot(gx - (x1 + t * ex), gy - (y1 + t * ey))
        else:
            _, scx, scy, r = stroke
            dist = np.abs(np.hypot(gx - scx, gy - scy) - r)
        d = np.minimum(d, dist)

    # soft 1-pixel edge around the stroke half-width
    px_scale = scale * size
    edge = 1.0 / px_scale
    return np.clip((STROKE_HALF_WIDTH + edge - d) / edge, 0.0, 1.0)


def glyph_image(class_id: int, size: int = GLYPH_SIZE) -> np.ndarray:
    """Clean canonical glyph, intensities in [0, 1]."""
    return _render(class_id, size, rotation_deg=0.0)


def synth_gesture_image(class_id: int, dr: DrParams = DR_NONE, size: int = GLYPH_SIZE,
                        center=(0.5, 0.5), scale: float = 1.0) -> np.ndarray:
    """Render a class glyph with sampled domain randomization.

    Deterministic for a given (class_id, dr.seed); pixels clamp to [0, 1].
    """
    _check_class(class_id)
    rng = np.random.default_rng([int(dr.seed), int(class_id)])
    rotation = rng.uniform(*dr.rotation_deg)
    brightness = rng.uniform(*dr.brightness)
    noise_amp = rng.uniform(*dr.noise_amp)
    background = rng.uniform(*dr.background)
    img = _render(class_id, size, rotation, center=center, scale=scale)
    noise = noise_amp * rng.uniform(-1.0, 1.0, size=img.shape)
    return np.clip(background + brightness * img + noise, 0.0, 1.0)


# ---------------------------------------------------------------------------
# PGM I/O (binary "P5", 8-bit)


def write_pgm(image: np.ndarray) -> bytes:
    """Encode a [0, 1] grayscale image as binary 8-bit PGM.

    Quantization rounds half up: v -> floor(255*v + 0.5).
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"image must be 2-D grayscale, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite values")
    q = np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    h, w = q.shape
    return b"P5\n%d %d\n255\n" % (w, h) + q.tobytes()


def save_pgm(path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(image))


def read_pgm(data: bytes) -> np.ndarray:
    """Decode binary 8-bit PGM to a [0, 1] float image."""
    if not isinstance(data, (bytes, bytearray)):
        raise ValueError("read_pgm expects bytes")
    if data[:2] != b"P5":
        raise ValueError(f"bad magic {data[:2]!r}: not a binary PGM")
    # header: magic, width, height, maxval separated by whitespace/comments,
    # then exactly one whitespace byte before the payload
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
            continue
        m = re.match(rb"\d+", data[pos:pos + 32])
        if not m:
            raise ValueError("malformed PGM header")
        fields.append(int(m.group(0)))
        pos += m.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ValueError("malformed PGM header: missing payload separator")
    pos += 1
    w, h, maxval = fields
    if w < 1 or h < 1 or w * h > MAX_PGM_PIXELS:
        raise ValueError(f"dimension overflow: {w}x{h}")
    if not (1 <= maxval <= 255):
        raise ValueError(f"unsupported maxval {maxval}: only 8-bit PGM")
    payload = data[pos:pos + w * h]
    if len(payload) < w * h:
        raise ValueError(f"truncated payload: expected {w * h} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
    return arr.astype(np.float64) / float(maxval)


def load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


# ---------------------------------------------------------------------------
# oracle classifier


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if (h, w) == (out_h, out_w):
        return image.copy()
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = image[np.ix_(y0, x0)] * (1 - fx) + image[np.ix_(y0, x1)] * fx
    bot = image[np.ix_(y1, x0)] * (1 - fx) + image[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


_TEMPLATES: np.ndarray | None = None


def _templates() -> np.ndarray:
    global _TEMPLATES
    if _TEMPLATES is None:
        mats = []
        for c in range(N_CLASSES):
            t = glyph_image(c).ravel()
            t = t - t.mean()
            mats.append(t / np.linalg.norm(t))
        _TEMPLATES = np.stack(mats)
    return _TEMPLATES


@dataclass(frozen=True)
class ClassifierResult:
    class_id: int
    confidence: float
    probs: np.ndarray
    scores: np.ndarray


def oracle_scores(image: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation against each clean glyph, in [-1, 1].

    A zero-variance image scores 0 against everything.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected 2-D grayscale image, got shape {image.shape}")
    if image.shape != (GLYPH_SIZE, GLYPH_SIZE):
        image = resize_bilinear(image, GLYPH_SIZE, GLYPH_SIZE)
    x = image.ravel() - image.mean()
    norm = np.linalg.norm(x)
    if norm < 1e-12:
        return np.zeros(N_CLASSES)
    return _templates() @ (x / norm)


def classify_oracle(image: np.ndarray) -> ClassifierResult:
    """Most correlated class with a softmax confidence over all scores."""
    scores = oracle_scores(image)
    probs = softmax(ORACLE_TEMPERATURE * scores)
    cls = int(np.argmax(probs))
    return ClassifierResult(class_id=cls, confidence=float(probs[cls]),
                            probs=probs, scores=scores)
