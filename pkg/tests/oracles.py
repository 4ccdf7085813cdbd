"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way (explicit
loops, per-pixel indexing) so it shares no code path with the vectorized
production routines it validates.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def conv_replicate(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Direct double-loop 2-D convolution with replicate edge handling.

    out[i, j] = sum_ab taps[a, b] * img[clip(i - (a - r)), clip(j - (b - r))]
    which is linear convolution of the replicated-extension image.
    """
    h, w = img.shape
    kh, kw = taps.shape
    rr = kh // 2
    rc = kw // 2
    out = np.zeros((h, w), dtype=taps.dtype)
    for i in range(h):
        for j in range(w):
            acc = out[i, j]
            for a in range(kh):
                y = i - (a - rr)
                if y < 0:
                    y = 0
                elif y >= h:
                    y = h - 1
                for b in range(kw):
                    x = j - (b - rc)
                    if x < 0:
                        x = 0
                    elif x >= w:
                        x = w - 1
                    acc += taps[a, b] * img[y, x]
            out[i, j] = acc
    return out


def conv_replicate_complex(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    return conv_replicate(np.asarray(img, dtype=np.complex128), np.asarray(taps, dtype=np.complex128))


def correlate_replicate(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Direct correlation (no kernel flip); for symmetric taps == convolution."""
    return conv_replicate(
        np.asarray(img, dtype=np.float64), np.asarray(taps, dtype=np.float64)[::-1, ::-1].copy()
    )


def gaussian_taps_2d(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    one_d = np.exp(-(x * x) / (2.0 * sigma * sigma))
    one_d = one_d / one_d.sum()
    return np.outer(one_d, one_d)


def dog_reference(img: np.ndarray, sigma_inner: float, sigma_outer: float) -> np.ndarray:
    """Difference of Gaussians via full 2-D direct convolution."""
    inner = correlate_replicate(img, gaussian_taps_2d(sigma_inner))
    outer = correlate_replicate(img, gaussian_taps_2d(sigma_outer))
    return inner - outer


def brute_region_histograms(code_maps, m_rows, n_cols, sub_regions, levels):
    """Per-pixel counting loop mirroring the descriptor layout.

    Returns a list of m_rows*n_cols vectors of length
    sub_regions * len(code_maps) * levels.
    """
    h, w = code_maps[0].codes.shape
    nmaps = len(code_maps)
    row_size = h // m_rows
    col_size = w // n_cols
    out = []
    for rj in range(m_rows):
        top = rj * row_size
        rh = row_size if rj < m_rows - 1 else h - top
        for cj in range(n_cols):
            left = cj * col_size
            rw = col_size if cj < n_cols - 1 else w - left
            vec = np.zeros(sub_regions * nmaps * levels)
            for y in range(top, top + rh):
                for x in range(left, left + rw):
                    s = _sub_index(y - top, x - left, rh, rw, sub_regions)
                    for g, cm in enumerate(code_maps):
                        sym = int(cm.codes[y, x])
                        vec[(s * nmaps + g) * levels + sym] += 1
            out.append(vec)
    return out


def _sub_index(y, x, rh, rw, sub_regions):
    if sub_regions == 1:
        return 0
    if sub_regions == 2:
        return 0 if y < rh // 2 else 1
    row = 0 if y < rh // 2 else 1
    col = 0 if x < rw // 2 else 1
    return row * 2 + col


def lda_direction(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Two-class Fisher direction Sw^-1 (m1 - m0), unnormalized."""
    classes = np.unique(labels)
    assert len(classes) == 2
    x0 = features[labels == classes[0]]
    x1 = features[labels == classes[1]]
    m0 = x0.mean(axis=0)
    m1 = x1.mean(axis=0)
    sw = (x0 - m0).T @ (x0 - m0) + (x1 - m1).T @ (x1 - m1)
    return np.linalg.solve(sw, m1 - m0)


def nearest_neighbor_rank1(gallery_feats, gallery_labels, probe_feats, probe_labels) -> float:
    """Cosine nearest neighbor on raw vectors; fraction of correct top-1."""
    hits = 0
    for pf, pl in zip(probe_feats, probe_labels):
        best = None
        best_sim = -np.inf
        for gf, gl in zip(gallery_feats, gallery_labels):
            sim = float(np.dot(pf, gf) / (np.linalg.norm(pf) * np.linalg.norm(gf)))
            if sim > best_sim:
                best_sim = sim
                best = gl
        hits += int(best == pl)
    return hits / len(probe_labels)
