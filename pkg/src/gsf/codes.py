"""Binary code maps over Gabor magnitude pictures.

Each magnitude picture G is differentiated with centered differences
(replicate edges) to get Gx, Gy, Gxx, Gyy and the curvature sum
G2 = Gxx + Gyy.  Every picture in play is binarized against its own
median, and small groups of those bit planes are packed into per-pixel
integer codes.  Because medians follow increasing affine maps, the
codes are invariant to G -> a*G + b with a > 0.

Three joint-code variants exist, plus a local-binary-pattern map used
as a baseline and a real-valued downsampling used as an ablation:

    gsf3:   4*B   + 2*Bx + By               (8 symbols)
    gsf1:   8*B   + 4*Bx + 2*By  + B2      (16 symbols)
    gsf2:   8*Bx  + 4*By + 2*Bxx + Byy     (16 symbols)
    lgbp:   quantized LBP(8,1) over G       (configurable symbols)
    rawdown: strided samples of G, Gx, Gy, G2 (no alphabet)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from gsf.gabor import Gmp


class GsfVariant(str, Enum):
    GSF3 = "gsf3"
    GSF1 = "gsf1"
    GSF2 = "gsf2"
    LGBP = "lgbp"
    RAWDOWN = "rawdown"


# symbol-count of the joint-code variants; lgbp is set by its level count
GSF_ALPHABETS = {GsfVariant.GSF3: 8, GsfVariant.GSF1: 16, GsfVariant.GSF2: 16}

CODE_VARIANTS = (GsfVariant.GSF3, GsfVariant.GSF1, GsfVariant.GSF2)


def _as_picture(src) -> np.ndarray:
    arr = src.magnitude if isinstance(src, Gmp) else src
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ValueError("need a 2-D picture of at least 3x3")
    return arr


def _dx(a: np.ndarray) -> np.ndarray:
    # east neighbor minus west neighbor, edges replicated
    p = np.pad(a, ((0, 0), (1, 1)), mode="edge")
    return p[:, 2:] - p[:, :-2]


def _dy(a: np.ndarray) -> np.ndarray:
    # south neighbor minus north neighbor (row index grows downward)
    p = np.pad(a, ((1, 1), (0, 0)), mode="edge")
    return p[2:, :] - p[:-2, :]


@dataclass(eq=False)
class DerivativeStack:
    """G and its first/second centered differences; g2 = gxx + gyy."""

    g: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    gxx: np.ndarray
    gyy: np.ndarray
    g2: np.ndarray


def derivatives(src) -> DerivativeStack:
    """Differentiate a magnitude picture (or any 2-D array, min 3x3)."""
    g = _as_picture(src)
    gx = _dx(g)
    gy = _dy(g)
    gxx = _dx(gx)
    gyy = _dy(gy)
    return DerivativeStack(g=g, gx=gx, gy=gy, gxx=gxx, gyy=gyy, g2=gxx + gyy)


class BinaryPlane(NamedTuple):
    bits: np.ndarray  # uint8 in {0, 1}
    threshold: float


def binarize_median(picture: np.ndarray) -> BinaryPlane:
    """1 where the pixel strictly exceeds the picture's own median.

    For an even pixel count the threshold is the mean of the two middle
    order statistics (numpy's median), so roughly half the pixels land
    on each side for generic data.
    """
    arr = np.asarray(picture, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("binarize_median expects a non-empty 2-D array")
    thr = float(np.median(arr))
    return BinaryPlane(bits=(arr > thr).astype(np.uint8), threshold=thr)


@dataclass(eq=False)
class CodeMap:
    codes: np.ndarray  # uint8, values in [0, alphabet)
    alphabet: int


def gsf_code_map(stack: DerivativeStack, variant: GsfVariant) -> CodeMap:
    """Pack median bit planes of the derivative stack into joint codes."""
    variant = GsfVariant(variant)
    if variant == GsfVariant.GSF3:
        planes = (stack.g, stack.gx, stack.gy)
    elif variant == GsfVariant.GSF1:
        planes = (stack.g, stack.gx, stack.gy, stack.g2)
    elif variant == GsfVariant.GSF2:
        planes = (stack.gx, stack.gy, stack.gxx, stack.gyy)
    else:
        raise ValueError(f"{variant.value} is not a joint-code variant")
    codes = np.zeros(np.asarray(stack.g).shape, dtype=np.uint8)
    for pic in planes:
        codes = (codes << 1) | binarize_median(pic).bits
    return CodeMap(codes=codes, alphabet=1 << len(planes))


_LBP_OFFSETS = (  # east, then counter-clockwise
    (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1),
)


def lgbp_code_map(src, levels: int = 8) -> CodeMap:
    """LBP(8,1) over a magnitude picture, quantized to ``levels`` symbols.

    Bit p compares the p-th neighbor (east first, counter-clockwise)
    against the center with >=, replicating edges.  The 256-symbol raw
    code is collapsed by floor division, so ``levels`` must divide 256.
    """
    g = _as_picture(src)
    if not (1 <= levels <= 256 and 256 % levels == 0):
        raise ValueError(f"levels must divide 256, got {levels}")
    h, w = g.shape
    p = np.pad(g, 1, mode="edge")
    raw = np.zeros((h, w), dtype=np.uint16)
    for bit, (dy, dx) in enumerate(_LBP_OFFSETS):
        neighbor = p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        raw |= (neighbor >= g).astype(np.uint16) << bit
    codes = (raw // (256 // levels)).astype(np.uint8)
    return CodeMap(codes=codes, alphabet=levels)


def rawdown_feature(stack: DerivativeStack, target_dim: int) -> np.ndarray:
    """Evenly strided samples of G, Gx, Gy, G2, concatenated in that order.

    ``target_dim`` must be a multiple of 4; each picture contributes
    target_dim/4 samples read at stride floor(pixels / quota) from the
    row-major flattening.
    """
    if target_dim <= 0 or target_dim % 4 != 0:
        raise ValueError(f"target_dim must be a positive multiple of 4, got {target_dim}")
    quota = target_dim // 4
    count = stack.g.size
    if quota > count:
        raise ValueError(f"target_dim {target_dim} exceeds 4x pixel count {4 * count}")
    stride = count // quota
    idx = np.arange(quota, dtype=np.intp) * stride
    parts = [np.asarray(pic, dtype=np.float64).ravel()[idx] for pic in (stack.g, stack.gx, stack.gy, stack.g2)]
    return np.concatenate(parts)
