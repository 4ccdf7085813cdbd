"""Gabor filter bank and magnitude picture extraction.

A bank kernel at scale nu and orientation mu is a complex exponential
with wave vector k = (k_max / f**nu) * (cos(pi*mu/orients),
sin(pi*mu/orients)) under a Gaussian envelope of width sigma/|k|,
scaled by |k|^2/sigma^2.  The oscillatory term carries a constant
offset exp(-sigma^2/2) meant to cancel the kernel's response to a
uniform image; after truncating to a finite grid that cancellation is
inexact, so the sampled taps are explicitly re-centered to sum to
(numerically) zero.  A constant input therefore yields a near-zero
magnitude picture.

Filtering is linear convolution with replicate padding, evaluated in
the frequency domain.  Per (bank, image size) the padded-kernel
spectra are cached, and all kernels sharing one size reuse a single
forward FFT of the padded image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as spfft

DEFAULT_MAX_KERNEL_SIDE = 65
MIN_IMAGE_SIDE = 8


@dataclass(frozen=True)
class GaborBankParams:
    num_scales: int = 5
    num_orientations: int = 8
    k_max: float = math.pi / 2.0
    f: float = math.sqrt(2.0)
    sigma: float = 2.0 * math.pi

    def __post_init__(self):
        if self.num_scales < 1 or self.num_orientations < 1:
            raise ValueError("bank needs at least one scale and one orientation")
        if self.k_max <= 0.0 or self.sigma <= 0.0:
            raise ValueError("k_max and sigma must be positive")
        if self.f <= 1.0:
            raise ValueError(f"scale spacing f must exceed 1, got {self.f}")

    @property
    def bank_size(self) -> int:
        return self.num_scales * self.num_orientations


@dataclass(eq=False)
class GaborKernel:
    scale_index: int
    orientation_index: int
    taps: np.ndarray  # complex128, square, odd side

    @property
    def side(self) -> int:
        return self.taps.shape[0]


@dataclass(eq=False)
class Gmp:
    """Magnitude picture: |image * kernel| at one scale/orientation."""

    scale_index: int
    orientation_index: int
    magnitude: np.ndarray  # float64, image-shaped, nonnegative


def _center_taps(taps: np.ndarray) -> np.ndarray:
    # Zero total sum = no response to a uniform input.
    return taps - taps.mean()


def make_kernel(
    scale_index: int,
    orientation_index: int,
    params: GaborBankParams | None = None,
    max_side: int | None = DEFAULT_MAX_KERNEL_SIDE,
) -> GaborKernel:
    """Sample one complex kernel on an odd square grid.

    The grid radius is ceil(3*sigma/|k|) so the envelope fits three
    standard deviations, clamped to ``max_side`` (bigger low-frequency
    kernels are center-cropped by the clamp).
    """
    p = params if params is not None else GaborBankParams()
    if not 0 <= scale_index < p.num_scales:
        raise ValueError(f"scale index {scale_index} outside [0, {p.num_scales})")
    if not 0 <= orientation_index < p.num_orientations:
        raise ValueError(f"orientation index {orientation_index} outside [0, {p.num_orientations})")
    knorm = p.k_max / (p.f ** scale_index)
    phi = math.pi * orientation_index / p.num_orientations
    kx = knorm * math.cos(phi)
    ky = knorm * math.sin(phi)
    radius = int(math.ceil(3.0 * p.sigma / knorm))
    side = 2 * radius + 1
    if max_side is not None:
        cap = max_side if max_side % 2 == 1 else max_side - 1
        if cap < 3:
            raise ValueError(f"max_side too small: {max_side}")
        side = min(side, cap)
        radius = side // 2
    x = np.arange(side, dtype=np.float64) - radius
    xx = x[None, :]
    yy = x[:, None]
    r2 = xx * xx + yy * yy
    s2 = p.sigma * p.sigma
    envelope = (knorm * knorm / s2) * np.exp(-(knorm * knorm) * r2 / (2.0 * s2))
    wave = np.exp(1j * (kx * xx + ky * yy)) - math.exp(-s2 / 2.0)
    taps = _center_taps(envelope * wave)
    return GaborKernel(scale_index, orientation_index, taps.astype(np.complex128))


@lru_cache(maxsize=8)
def _bank_cached(params: GaborBankParams, max_side: int | None) -> tuple[GaborKernel, ...]:
    return tuple(
        make_kernel(nu, mu, params, max_side)
        for nu in range(params.num_scales)
        for mu in range(params.num_orientations)
    )


def make_bank(
    params: GaborBankParams | None = None,
    max_side: int | None = DEFAULT_MAX_KERNEL_SIDE,
) -> list[GaborKernel]:
    """All kernels in scale-major order: index = nu * orientations + mu."""
    p = params if params is not None else GaborBankParams()
    return list(_bank_cached(p, max_side))


def effective_kernels(params: GaborBankParams, height: int, width: int) -> list[GaborKernel]:
    """The kernels actually convolved with a height x width image.

    Kernels wider than the short image side are center-cropped to the
    largest odd side that fits, and the zero-sum property is restored
    on the surviving taps.
    """
    cap = min(height, width)
    if cap % 2 == 0:
        cap -= 1
    out = []
    for ker in _bank_cached(params, DEFAULT_MAX_KERNEL_SIDE):
        taps = ker.taps
        if taps.shape[0] > cap:
            off = (taps.shape[0] - cap) // 2
            taps = _center_taps(taps[off : off + cap, off : off + cap])
        out.append(GaborKernel(ker.scale_index, ker.orientation_index, taps))
    return out


class _GmpPlan:
    """Frequency-domain convolution plan for one (bank, image size) pair.

    Kernels are grouped by effective radius; each group shares one
    padded-image FFT.  Kernel spectra are precomputed at the group's
    FFT shape.
    """

    def __init__(self, params: GaborBankParams, height: int, width: int):
        groups: dict[int, list[tuple[int, int, np.ndarray]]] = {}
        for ker in effective_kernels(params, height, width):
            radius = ker.side // 2
            groups.setdefault(radius, []).append((ker.scale_index, ker.orientation_index, ker.taps))
        self.groups = []
        for radius, members in sorted(groups.items()):
            shape = (
                spfft.next_fast_len(height + 4 * radius),
                spfft.next_fast_len(width + 4 * radius),
            )
            spectra = [(nu, mu, spfft.fft2(taps, s=shape)) for nu, mu, taps in members]
            self.groups.append((radius, shape, spectra))


@lru_cache(maxsize=4)
def _gmp_plan(params: GaborBankParams, height: int, width: int) -> _GmpPlan:
    return _GmpPlan(params, height, width)


def compute_gmps(img: np.ndarray, params: GaborBankParams | None = None) -> list[Gmp]:
    """Magnitude pictures for every bank kernel, scale-major order.

    Replicate padding keeps the output the size of the input.  Kernels
    wider than the image are center-cropped to fit (odd side), with the
    zero-mean correction reapplied.
    """
    p = params if params is not None else GaborBankParams()
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("compute_gmps expects a 2-D array")
    h, w = img.shape
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ValueError(f"image {h}x{w} below minimum side {MIN_IMAGE_SIDE}")
    plan = _gmp_plan(p, h, w)
    out: dict[tuple[int, int], Gmp] = {}
    for radius, shape, spectra in plan.groups:
        padded = np.pad(img, radius, mode="edge")
        fimg = spfft.fft2(padded, s=shape)
        for nu, mu, spec in spectra:
            full = spfft.ifft2(fimg * spec)
            # linear conv of (H+2r)x(W+2r) with (2r+1): 'same' w.r.t. the
            # unpadded image starts at offset 2r in the full result
            block = full[2 * radius : 2 * radius + h, 2 * radius : 2 * radius + w]
            out[(nu, mu)] = Gmp(nu, mu, np.abs(block))
    return [out[(nu, mu)] for nu in range(p.num_scales) for mu in range(p.num_orientations)]
