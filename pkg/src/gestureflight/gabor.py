"""Gabor kernels and the fixed filter bank used as the network stem."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PARTS = ("real", "imag")

DEFAULT_N_ORIENTATIONS = 8
DEFAULT_WAVELENGTHS = (2.0, 4.0)
DEFAULT_SIGMA = 2.0
DEFAULT_GAMMA = 0.5
DEFAULT_PHASE = 0.0
DEFAULT_KSIZE = 3


@dataclass(frozen=True)
class GaborParams:
    """Parameters of a single Gabor kernel.

    theta: orientation in radians, [0, 2*pi]
    wavelength: sinusoid wavelength in pixels, >= 2
    sigma: Gaussian envelope scale, > 0
    gamma: spatial aspect ratio, (0, 1]
    phase: sinusoid phase offset in radians, [-pi, pi]
    ksize: kernel side length, odd and >= 3
    """
    theta: float
    wavelength: float
    sigma: float
    gamma: float
    phase: float = 0.0
    ksize: int = DEFAULT_KSIZE


def validate_gabor_params(p: GaborParams) -> None:
    if not (0.0 <= p.theta <= 2.0 * math.pi):
        raise ValueError(f"theta must be in [0, 2*pi], got {p.theta}")
    if not p.wavelength >= 2.0:
        raise ValueError(f"wavelength must be >= 2, got {p.wavelength}")
    if not p.sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {p.sigma}")
    if not (0.0 < p.gamma <= 1.0):
        raise ValueError(f"gamma must be in (0, 1], got {p.gamma}")
    if not (-math.pi <= p.phase <= math.pi):
        raise ValueError(f"phase must be in [-pi, pi], got {p.phase}")
    if p.ksize < 3 or p.ksize % 2 == 0:
        raise ValueError(f"ksize must be odd and >= 3, got {p.ksize}")


def gabor_kernel(p: GaborParams, part: str = "real") -> np.ndarray:
    """Evaluate one kernel on the integer grid centered on the middle entry.

    Entry [i, j] is the Gabor value at offsets x = j - c (columns) and
    y = i - c (rows) from the center c = ksize // 2:

        x' =  x*cos(theta) + y*sin(theta)
        y' = -x*sin(theta) + y*cos(theta)
        g  = exp(-(x'^2 + gamma^2 * y'^2) / (2*sigma^2))
             * cos(2*pi*x'/wavelength + phase)      (real part)

    The imaginary part replaces cos with sin.
    """
    validate_gabor_params(p)
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}, got {part!r}")
    c = p.ksize // 2
    offs = np.arange(p.ksize, dtype=np.float64) - c
    y, x = np.meshgrid(offs, offs, indexing="ij")
    xp = x * math.cos(p.theta) + y * math.sin(p.theta)
    yp = -x * math.sin(p.theta) + y * math.cos(p.theta)
    envelope = np.exp(-(xp ** 2 + (p.gamma ** 2) * yp ** 2) / (2.0 * p.sigma ** 2))
    angle = 2.0 * math.pi * xp / p.wavelength + p.phase
    carrier = np.cos(angle) if part == "real" else np.sin(angle)
    return envelope * carrier


def bank_params(n_orientations: int = DEFAULT_N_ORIENTATIONS,
                wavelengths=DEFAULT_WAVELENGTHS,
                sigma: float = DEFAULT_SIGMA,
                gamma: float = DEFAULT_GAMMA,
                phase: float = DEFAULT_PHASE,
                ksize: int = DEFAULT_KSIZE) -> list[GaborParams]:
    """Parameter list for a bank, orientation-major: theta_j = j*pi/n."""
    if n_orientations < 1:
        raise ValueError(f"n_orientations must be >= 1, got {n_orientations}")
    wavelengths = tuple(float(w) for w in wavelengths)
    if not wavelengths:
        raise ValueError("at least one wavelength is required")
    params = []
    for j in range(n_orientations):
        theta = j * math.pi / n_orientations
        for wl in wavelengths:
            params.append(GaborParams(theta=theta, wavelength=wl, sigma=sigma,
                                      gamma=gamma, phase=phase, ksize=ksize))
    for p in params:
        validate_gabor_params(p)
    return params


def gabor_bank(n_orientations: int = DEFAULT_N_ORIENTATIONS,
               wavelengths=DEFAULT_WAVELENGTHS,
               sigma: float = DEFAULT_SIGMA,
               gamma: float = DEFAULT_GAMMA,
               phase: float = DEFAULT_PHASE,
               ksize: int = DEFAULT_KSIZE,
               part: str = "real") -> np.ndarray:
    """Stack a kernel bank as conv2d weights of shape (k, k, 1, n*len(wavelengths)).

    Channel order is orientation-major: all wavelengths of orientation 0,
    then orientation 1, and so on. The default bank (8 orientations, two
    wavelengths) yields 16 channels.
    """
    params = bank_params(n_orientations, wavelengths, sigma, gamma, phase, ksize)
    kernels = np.stack([gabor_kernel(p, part) for p in params], axis=-1)
    return kernels[:, :, np.newaxis, :]
