"""Grayscale image I/O, geometric normalization, and dataset manifests.

Images travel through the pipeline as 2-D float64 arrays indexed
``[row, col]``.  Loading maps 8-bit pixels to [0, 1]; later stages are
free to leave that range.  Binary PGM (P5, 8-bit) is the interchange
format; PNG is read and written through Pillow.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

ROLES = ("train", "gallery", "probe")


# ---------------------------------------------------------------------------
# image files


def _parse_pgm(data: bytes, path) -> np.ndarray:
    # Tokenizer for the P5 header: whitespace-separated tokens, with
    # '#' comments running to end of line.
    pos = 0
    tokens = []
    while len(tokens) < 4 and pos < len(data):
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary 8-bit PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: empty raster {width}x{height}")
    if not 0 < maxval < 256:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval={maxval})")
    pos += 1  # single whitespace byte after maxval terminates the header
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return img.astype(np.float64) / 255.0


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a grayscale image as float64 in [0, 1], shape (H, W).

    PGM is parsed directly; anything else is handed to Pillow and
    converted to 8-bit luminance first.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such image file: {path}")
    data = path.read_bytes()
    if data[:2] == b"P5":
        return _parse_pgm(data, path)
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                im = im.convert("L")
            arr = np.asarray(im, dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"{path}: unsupported image format ({exc})") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{path}: expected a non-empty grayscale raster")
    return arr.astype(np.float64) / 255.0


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write a float image as 8-bit grayscale; [0,1] clipped, then rounded.

    The format follows the file suffix: ``.pgm`` writes binary P5,
    everything else goes through Pillow (``.png`` being the intended
    case).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("save_image expects a non-empty 2-D array")
    quant = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        h, w = quant.shape
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(quant.tobytes())
    else:
        Image.fromarray(quant, mode="L").save(path)


# ---------------------------------------------------------------------------
# geometry


def _bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape
    ys = np.arange(out_h, dtype=np.float64) * (h / out_h)
    xs = np.arange(out_w, dtype=np.float64) * (w / out_w)
    ys = np.minimum(ys, h - 1.0)
    xs = np.minimum(xs, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[y0[:, None], x0[None, :]] * (1.0 - wx) + img[y0[:, None], x1[None, :]] * wx
    bot = img[y1[:, None], x0[None, :]] * (1.0 - wx) + img[y1[:, None], x1[None, :]] * wx
    return top * (1.0 - wy) + bot * wy


def resize_crop(img: np.ndarray, height: int, width: int, crop_only: bool = False) -> np.ndarray:
    """Bring an image to (height, width) by bilinear resize and/or center crop.

    With ``crop_only`` the source must already be at least the target in
    both axes and only a center crop is taken.  Otherwise the image is
    resized preserving aspect ratio so the target fits, then cropped.
    Sampling maps output pixel i to source coordinate i * (in/out), so a
    2x downscale reads the even source lattice exactly.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("resize_crop expects a 2-D array")
    if height <= 0 or width <= 0:
        raise ValueError("target dimensions must be positive")
    h, w = img.shape
    if crop_only:
        if h < height or w < width:
            raise ValueError(f"cannot crop {h}x{w} image to larger {height}x{width}")
        top = (h - height) // 2
        left = (w - width) // 2
        return img[top : top + height, left : left + width].copy()
    if (h, w) == (height, width):
        return img.copy()
    scale = max(height / h, width / w)
    rh = max(height, int(round(h * scale)))
    rw = max(width, int(round(w * scale)))
    resized = _bilinear_resize(img, rh, rw)
    top = (rh - height) // 2
    left = (rw - width) // 2
    return resized[top : top + height, left : left + width].copy()


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    path: Path     # resolved against the manifest's directory
    subject: str
    role: str      # train | gallery | probe


@dataclass
class DatasetManifest:
    """Parsed dataset listing: one image per line with subject and role."""

    entries: list[ManifestEntry]
    base_dir: Path

    def split(self, role: str) -> list[ManifestEntry]:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        return [e for e in self.entries if e.role == role]

    def __len__(self) -> int:
        return len(self.entries)


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Read a ``path,subject,role`` listing.

    Blank lines and '#' comment lines are skipped.  Relative image paths
    are resolved against the manifest's own directory.  The image path
    may itself contain commas, so the line is split on the last two.
    Every referenced file must exist; gallery and probe entries must
    carry a subject label.
    """
    mpath = Path(path)
    if not mpath.is_file():
        raise ValueError(f"no such manifest: {mpath}")
    base = mpath.resolve().parent
    entries: list[ManifestEntry] = []
    for lineno, raw in enumerate(mpath.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.rsplit(",", 2)]
        if len(parts) != 3 or not parts[0]:
            raise ValueError(f"{mpath}:{lineno}: expected 'path,subject,role'")
        rel, subject, role = parts
        if role not in ROLES:
            raise ValueError(f"{mpath}:{lineno}: bad role {role!r} (want train|gallery|probe)")
        if role in ("gallery", "probe") and not subject:
            raise ValueError(f"{mpath}:{lineno}: {role} entries need a subject label")
        ipath = Path(rel)
        if not ipath.is_absolute():
            ipath = base / ipath
        if not ipath.is_file():
            raise ValueError(f"{mpath}:{lineno}: missing image file {ipath}")
        entries.append(ManifestEntry(path=ipath, subject=subject, role=role))
    return DatasetManifest(entries=entries, base_dir=base)


def write_manifest(entries, path: str | os.PathLike) -> None:
    """Write ``(path, subject, role)`` triples; paths are stored as given."""
    lines = []
    for p, subject, role in entries:
        if role not in ROLES:
            raise ValueError(f"bad role {role!r}")
        lines.append(f"{p},{subject},{role}")
    Path(path).write_text("\n".join(lines) + "\n")


def scan_subject_dirs(root: str | os.PathLike, references: int = 3,
                      suffixes=(".pgm", ".png")) -> list[tuple[str, str, str]]:
    """Manifest rows for a ``<root>/<subject>/<number>.<ext>`` archive.

    Per subject, the first ``references`` images (numeric filename order)
    enroll it — each appears once as train and once as gallery — and the
    remaining images become probes.  Subject directories are ordered by
    the number embedded in their name, so ``s10`` follows ``s9``.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"no such directory: {root}")

    def trailing_number(name: str) -> int:
        digits = "".join(c for c in name if c.isdigit())
        return int(digits) if digits else 0

    subject_dirs = sorted(
        (d for d in root.iterdir() if d.is_dir()),
        key=lambda d: (trailing_number(d.name), d.name),
    )
    rows: list[tuple[str, str, str]] = []
    for d in subject_dirs:
        images = sorted(
            (p for p in d.iterdir() if p.suffix.lower() in suffixes),
            key=lambda p: (trailing_number(p.stem), p.name),
        )
        if len(images) <= references:
            raise ValueError(
                f"{d}: need more than {references} images to leave a probe split"
            )
        for i, p in enumerate(images):
            if i < references:
                rows.append((str(p), d.name, "train"))
                rows.append((str(p), d.name, "gallery"))
            else:
                rows.append((str(p), d.name, "probe"))
    if not rows:
        raise ValueError(f"{root}: no subject directories with images")
    return rows
