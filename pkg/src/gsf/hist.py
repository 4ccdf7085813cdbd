"""Spatial partitioning and regional histogram descriptors.

The image splits into an m_rows x n_cols grid of regions (floor-sized
bands, remainders absorbed by the last row/column).  Each region
optionally splits again into 1, 2 (top/bottom), or 4 (2x2) sub-regions.
A region's descriptor concatenates, sub-region by sub-region and code
map by code map, the L-bin count histogram of each code map restricted
to that sub-region; total length sub_regions * num_maps * levels.

For the real-valued ablation the same layout is kept, but each
(sub-region, picture-stack) cell contributes ``levels`` strided samples
instead of a histogram.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from gsf.codes import CodeMap, DerivativeStack, rawdown_feature

_ALLOWED_SUBREGIONS = (1, 2, 4)


@dataclass(frozen=True)
class PartitionConfig:
    m_rows: int = 10
    n_cols: int = 4
    sub_regions: int = 2
    levels: int = 16

    def __post_init__(self):
        if self.m_rows < 1 or self.n_cols < 1:
            raise ValueError("grid must have at least one row and one column")
        if self.sub_regions not in _ALLOWED_SUBREGIONS:
            raise ValueError(f"sub_regions must be one of {_ALLOWED_SUBREGIONS}")
        if self.levels < 1:
            raise ValueError("levels must be positive")

    @property
    def num_regions(self) -> int:
        return self.m_rows * self.n_cols


class Rect(NamedTuple):
    top: int
    left: int
    height: int
    width: int


class RegionGeometry(NamedTuple):
    rect: Rect
    subs: tuple[Rect, ...]


def _bands(extent: int, count: int) -> list[tuple[int, int]]:
    size = extent // count
    out = []
    for i in range(count):
        start = i * size
        length = size if i < count - 1 else extent - start
        out.append((start, length))
    return out


def _split_rect(rect: Rect, sub_regions: int) -> tuple[Rect, ...]:
    if sub_regions == 1:
        return (rect,)
    if sub_regions == 2:  # top / bottom halves
        hh = rect.height // 2
        return (
            Rect(rect.top, rect.left, hh, rect.width),
            Rect(rect.top + hh, rect.left, rect.height - hh, rect.width),
        )
    hh = rect.height // 2
    ww = rect.width // 2
    return (
        Rect(rect.top, rect.left, hh, ww),
        Rect(rect.top, rect.left + ww, hh, rect.width - ww),
        Rect(rect.top + hh, rect.left, rect.height - hh, ww),
        Rect(rect.top + hh, rect.left + ww, rect.height - hh, rect.width - ww),
    )


def partition(height: int, width: int, cfg: PartitionConfig) -> list[RegionGeometry]:
    """Region rectangles in row-major order: region j = row * n_cols + col."""
    if height < cfg.m_rows or width < cfg.n_cols:
        raise ValueError(f"image {height}x{width} too small for a {cfg.m_rows}x{cfg.n_cols} grid")
    rows = _bands(height, cfg.m_rows)
    cols = _bands(width, cfg.n_cols)
    out = []
    for top, rh in rows:
        for left, rw in cols:
            rect = Rect(top, left, rh, rw)
            out.append(RegionGeometry(rect=rect, subs=_split_rect(rect, cfg.sub_regions)))
    return out


@lru_cache(maxsize=8)
def _sub_block_map(height: int, width: int, cfg: PartitionConfig) -> np.ndarray:
    """Per-pixel flat sub-region id: region_index * sub_regions + sub_index."""
    blocks = np.empty((height, width), dtype=np.int64)
    for j, region in enumerate(partition(height, width, cfg)):
        for s, r in enumerate(region.subs):
            blocks[r.top : r.top + r.height, r.left : r.left + r.width] = j * cfg.sub_regions + s
    return blocks


@dataclass(eq=False)
class HistogramSequence:
    """Per-region descriptors in region order, plus the layout they follow."""

    regions: list[np.ndarray]  # float64 vectors, one per region
    config: PartitionConfig
    num_maps: int

    @property
    def region_length(self) -> int:
        return len(self.regions[0]) if self.regions else 0

    def concatenated(self) -> np.ndarray:
        return np.concatenate(self.regions) if self.regions else np.zeros(0)


def region_histograms(code_maps: list[CodeMap], cfg: PartitionConfig) -> HistogramSequence:
    """Regional histograms over a stack of same-shape code maps.

    Region vector layout is sub-region-major, then code map, then bin:
    entry index = (s * num_maps + map_index) * levels + symbol.  Counts
    are raw (not normalized); since sub-regions partition the region,
    a region's vector sums to num_maps * region_pixel_count.
    """
    if not code_maps:
        raise ValueError("need at least one code map")
    shape = code_maps[0].codes.shape
    for cm in code_maps:
        if cm.codes.shape != shape:
            raise ValueError("code maps disagree on image shape")
        if cm.alphabet != cfg.levels:
            raise ValueError(f"code map alphabet {cm.alphabet} != configured levels {cfg.levels}")
        if cm.codes.size and int(cm.codes.max()) >= cfg.levels:
            raise ValueError("code symbol outside the configured alphabet")
    h, w = shape
    nmaps = len(code_maps)
    levels = cfg.levels
    sub = cfg.sub_regions
    blocks = _sub_block_map(h, w, cfg)
    # composite index: ((sub_block * nmaps) + map) * levels + symbol, one
    # bincount over all pixels of all maps
    counts = np.zeros(cfg.num_regions * sub * nmaps * levels, dtype=np.int64)
    for g, cm in enumerate(code_maps):
        idx = (blocks * nmaps + g) * levels + cm.codes.astype(np.int64)
        counts += np.bincount(idx.ravel(), minlength=counts.size)
    region_len = sub * nmaps * levels
    regions = [
        counts[j * region_len : (j + 1) * region_len].astype(np.float64)
        for j in range(cfg.num_regions)
    ]
    return HistogramSequence(regions=regions, config=cfg, num_maps=nmaps)


def region_rawdown(stacks: list[DerivativeStack], cfg: PartitionConfig) -> HistogramSequence:
    """Regional real-valued descriptors mirroring the histogram layout.

    Each (sub-region, stack) cell yields ``levels`` strided samples of
    the sub-region crops of G, Gx, Gy, G2, so region vectors have the
    same length as histogram vectors would.
    """
    if not stacks:
        raise ValueError("need at least one derivative stack")
    if cfg.levels % 4 != 0:
        raise ValueError("rawdown needs levels divisible by 4")
    shape = stacks[0].g.shape
    for st in stacks:
        if st.g.shape != shape:
            raise ValueError("derivative stacks disagree on image shape")
    h, w = shape
    geometry = partition(h, w, cfg)
    regions = []
    for region in geometry:
        parts = []
        for r in region.subs:
            sl = (slice(r.top, r.top + r.height), slice(r.left, r.left + r.width))
            for st in stacks:
                crop = DerivativeStack(
                    g=st.g[sl], gx=st.gx[sl], gy=st.gy[sl],
                    gxx=st.gxx[sl], gyy=st.gyy[sl], g2=st.g2[sl],
                )
                parts.append(rawdown_feature(crop, cfg.levels))
        regions.append(np.concatenate(parts))
    return HistogramSequence(regions=regions, config=cfg, num_maps=len(stacks))
