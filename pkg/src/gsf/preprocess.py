"""Photometric normalization chain for raw face images.

Three stages run in a fixed order: gamma correction, a
difference-of-Gaussians bandpass, and a two-pass contrast equalization
that ends in a saturating tanh.  The chain maps nonnegative input to a
roughly zero-mean picture bounded by the tanh ceiling, and is invariant
to a positive rescaling of the input up to float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


@dataclass(frozen=True)
class PreprocessParams:
    gamma: float = 0.2
    dog_sigma_inner: float = 1.0
    dog_sigma_outer: float = 2.0
    alpha: float = 0.1
    tau: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.dog_sigma_inner <= 0.0 or self.dog_sigma_outer <= self.dog_sigma_inner:
            raise ValueError("need 0 < dog_sigma_inner < dog_sigma_outer")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def gamma_correct(img: np.ndarray, gamma: float = 0.2) -> np.ndarray:
    """Raise nonnegative pixels to the ``gamma`` power (compresses highlights)."""
    img = np.asarray(img, dtype=np.float64)
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if img.size and float(img.min()) < 0.0:
        raise ValueError("gamma correction needs nonnegative pixels")
    return np.power(img, gamma)


def _gaussian_taps(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def dog_filter(img: np.ndarray, sigma_inner: float = 1.0, sigma_outer: float = 2.0) -> np.ndarray:
    """Difference of two unit-sum Gaussian blurs (inner minus outer).

    Each blur is separable with kernel radius ceil(3*sigma) and
    replicate edge handling, so a constant image maps to (near) zero.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("dog_filter expects a non-empty 2-D array")
    if sigma_inner <= 0.0 or sigma_outer <= sigma_inner:
        raise ValueError("need 0 < sigma_inner < sigma_outer")

    def blur(sigma):
        taps = _gaussian_taps(sigma)
        tmp = correlate1d(img, taps, axis=0, mode="nearest")
        return correlate1d(tmp, taps, axis=1, mode="nearest")

    return blur(sigma_inner) - blur(sigma_outer)


def contrast_equalize(img: np.ndarray, alpha: float = 0.1, tau: float = 10.0) -> np.ndarray:
    """Rescale global contrast, then compress outliers with tau*tanh(x/tau).

    Two normalization passes divide by a generalized mean of |x|; the
    second clips magnitudes at tau before averaging so that a few
    extreme pixels cannot dominate the scale estimate.  Output values
    lie strictly inside (-tau, tau).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("contrast_equalize expects a non-empty 2-D array")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    mag = np.abs(img)
    denom = float(np.mean(np.power(mag, alpha))) ** (1.0 / alpha)
    if denom == 0.0:
        raise ValueError("contrast_equalize: all-zero input")
    x = img / denom
    mag = np.minimum(tau, np.abs(x))
    denom = float(np.mean(np.power(mag, alpha))) ** (1.0 / alpha)
    x = x / denom
    return tau * np.tanh(x / tau)


def preprocess(img: np.ndarray, params: PreprocessParams | None = None) -> np.ndarray:
    """Full chain: gamma -> DoG bandpass -> contrast equalization."""
    p = params if params is not None else PreprocessParams()
    x = gamma_correct(img, p.gamma)
    x = dog_filter(x, p.dog_sigma_inner, p.dog_sigma_outer)
    return contrast_equalize(x, p.alpha, p.tau)
