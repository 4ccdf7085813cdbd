"""Deterministic synthetic identification benchmark.

Each subject is a band-limited random texture (energy confined to an
annulus of spatial frequencies, so structure is neither flat nor pure
noise).  Instances of a subject rescale brightness and add pixel noise,
then everything is clipped to [0, 1] and written as 8-bit PGM files
with a train/gallery/probe manifest.  Everything derives from one seed
through a single generator, so a spec always produces the same bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gsf.imgio import save_image, write_manifest


@dataclass(frozen=True)
class SyntheticSpec:
    num_subjects: int = 20
    instances_per_subject: int = 5
    train_per_subject: int = 2
    gallery_per_subject: int = 1
    height: int = 80
    width: int = 64
    band_lo: float = 3.0   # cycles per image
    band_hi: float = 10.0
    brightness_jitter: float = 0.2  # instance gain drawn from 1 +/- this
    noise_level: float = 0.05       # stddev as a fraction of base dynamic range
    seed: int = 7

    def __post_init__(self):
        if self.num_subjects < 2:
            raise ValueError("need at least two subjects")
        if self.train_per_subject + self.gallery_per_subject >= self.instances_per_subject:
            raise ValueError("no instances left for the probe split")
        if self.gallery_per_subject < 1:
            raise ValueError("need at least one gallery instance per subject")
        if not 0.0 < self.band_lo < self.band_hi:
            raise ValueError("need 0 < band_lo < band_hi")
        if not 0.0 <= self.brightness_jitter < 1.0:
            raise ValueError("brightness_jitter must be in [0, 1)")


def band_texture(rng: np.random.Generator, height: int, width: int, lo: float, hi: float) -> np.ndarray:
    """Random texture with spectrum restricted to [lo, hi] cycles/image."""
    spec = rng.normal(size=(height, width)) + 1j * rng.normal(size=(height, width))
    fy = np.fft.fftfreq(height)[:, None] * height
    fx = np.fft.fftfreq(width)[None, :] * width
    radial = np.sqrt(fy * fy + fx * fx)
    spec *= (radial >= lo) & (radial <= hi)
    img = np.fft.ifft2(spec).real
    sd = img.std()
    if sd == 0.0:  # band missed every frequency bin
        raise ValueError(f"band [{lo}, {hi}] contains no representable frequency")
    return np.clip(0.5 + 0.12 * (img - img.mean()) / sd, 0.02, 0.98)


def make_instance(base: np.ndarray, rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    gain = rng.uniform(1.0 - spec.brightness_jitter, 1.0 + spec.brightness_jitter)
    span = float(base.max() - base.min())
    noisy = gain * base + rng.normal(0.0, spec.noise_level * span, size=base.shape)
    return np.clip(noisy, 0.0, 1.0)


def write_dataset(out_dir: str | os.PathLike, spec: SyntheticSpec | None = None) -> Path:
    """Generate the dataset under ``out_dir``; returns the manifest path.

    Instance i of a subject goes to train for i < train_per_subject,
    then gallery, then probe.
    """
    spec = spec if spec is not None else SyntheticSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    rows = []
    for s in range(spec.num_subjects):
        subject = f"s{s:03d}"
        base = band_texture(rng, spec.height, spec.width, spec.band_lo, spec.band_hi)
        for i in range(spec.instances_per_subject):
            if i < spec.train_per_subject:
                role = "train"
            elif i < spec.train_per_subject + spec.gallery_per_subject:
                role = "gallery"
            else:
                role = "probe"
            name = f"{subject}_i{i}.pgm"
            save_image(make_instance(base, rng, spec), out / name)
            rows.append((name, subject, role))
    manifest = out / "manifest.txt"
    write_manifest(rows, manifest)
    return manifest
