"""Per-region discriminant subspaces and model (de)serialization.

Each spatial region gets its own two-stage projection learned from
training descriptors: PCA to the smallest rank capturing a variance
fraction (capped at n_samples - n_classes), then a regularized Fisher
discriminant inside that PCA space.  The stored per-region matrix is
the composition, so applying a model is a single matrix product per
region.  Faces are compared by summing per-region cosine similarities,
optionally weighted by learned per-region reliabilities.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from gsf.codes import GsfVariant
from gsf.gabor import GaborBankParams
from gsf.hist import HistogramSequence, PartitionConfig
from gsf.preprocess import PreprocessParams

log = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-4
DEFAULT_PCA_VAR = 0.99


@dataclass(eq=False)
class FdaRegionModel:
    region_index: int
    projection: np.ndarray  # (input_dim, output_dim), PCA and FLD composed
    class_count: int

    @property
    def input_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def output_dim(self) -> int:
        return self.projection.shape[1]


def _canonical_signs(w: np.ndarray) -> np.ndarray:
    # direction vectors are sign-ambiguous; fix each column so its
    # largest-magnitude entry is positive (first such entry on ties)
    out = w.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            out[:, c] = -col
    return out


def train_fda_region(
    features: np.ndarray,
    labels,
    num_components: int,
    ridge: float = DEFAULT_RIDGE,
    pca_var: float = DEFAULT_PCA_VAR,
    region_index: int = 0,
) -> FdaRegionModel:
    """Fit one region's PCA + Fisher projection.

    Parameters
    ----------
    features : (n_samples, dim) array of region descriptors.
    labels : length-n class labels (any hashable values).
    num_components : requested discriminant dimensions; silently capped
        at n_classes - 1 and at the PCA rank (a warning is logged when
        the cap bites).
    ridge : within-class scatter regularizer, added as
        ridge * trace(Sw)/k * I before solving.
    pca_var : variance fraction the PCA stage must retain.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be (n_samples, dim)")
    n, d = x.shape
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"got {n} samples but {y.shape} labels")
    if num_components < 1:
        raise ValueError("num_components must be positive")
    if ridge < 0.0 or not 0.0 < pca_var <= 1.0:
        raise ValueError("need ridge >= 0 and pca_var in (0, 1]")
    classes, y_idx = np.unique(y, return_inverse=True)
    c = len(classes)
    if c < 2:
        raise ValueError("need at least two classes")
    if n <= c:
        raise ValueError("need at least one class with two or more samples")

    mean = x.mean(axis=0)
    xc = x - mean
    class_means = np.stack([xc[y_idx == i].mean(axis=0) for i in range(c)])
    counts = np.bincount(y_idx, minlength=c).astype(np.float64)
    between = float(np.sum(counts * np.sum(class_means**2, axis=1)))
    if between <= 0.0:
        raise ValueError("class means coincide; between-class scatter is degenerate")

    # PCA stage: smallest rank reaching pca_var of total variance,
    # never past n - c (keeps within-class scatter invertible-ish)
    _, svals, vt = np.linalg.svd(xc, full_matrices=False)
    var = svals**2
    total = float(var.sum())
    ratio = np.cumsum(var) / total
    k = int(np.searchsorted(ratio, pca_var - 1e-12)) + 1
    significant = int(np.sum(svals > svals[0] * 1e-12))
    k = max(1, min(k, n - c, significant))
    basis = vt[:k].T  # (d, k)
    z = xc @ basis

    # Fisher stage inside the PCA space
    zmeans = class_means @ basis
    sw = np.zeros((k, k))
    for i in range(c):
        zi = z[y_idx == i] - zmeans[i]
        sw += zi.T @ zi
    sb = (zmeans * counts[:, None]).T @ zmeans
    sw = 0.5 * (sw + sw.T)
    sb = 0.5 * (sb + sb.T)
    tw = float(np.trace(sw))
    if tw <= 0.0:
        raise ValueError("within-class scatter vanished; cannot regularize")
    sw_reg = sw + (ridge * tw / k) * np.eye(k)
    evals, evecs = scipy.linalg.eigh(sb, sw_reg)
    order = np.argsort(evals)[::-1]

    r = min(num_components, c - 1, k)
    if r < num_components:
        log.warning(
            "region %d: requested %d components, keeping %d (classes=%d, pca rank=%d)",
            region_index, num_components, r, c, k,
        )
    fld = evecs[:, order[:r]]
    projection = _canonical_signs(basis @ fld)
    return FdaRegionModel(region_index=region_index, projection=projection, class_count=c)


# ---------------------------------------------------------------------------
# projected faces and scoring


@dataclass(eq=False)
class ProjectedFace:
    parts: list[np.ndarray]  # one subspace vector per region


@dataclass(eq=False)
class EpfdaModel:
    """Everything needed to reproduce extraction, projection and scoring."""

    regions: list[FdaRegionModel]
    weights: np.ndarray  # one float per region
    partition: PartitionConfig
    variant: GsfVariant
    gabor: GaborBankParams
    pre: PreprocessParams
    preprocess_enabled: bool = True
    weighted: bool = False

    def __post_init__(self):
        if len(self.regions) != self.partition.num_regions:
            raise ValueError("region count does not match the partition grid")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.regions),):
            raise ValueError("need exactly one weight per region")


def project(model: EpfdaModel, features: HistogramSequence) -> ProjectedFace:
    """Apply each region's projection to the matching region descriptor."""
    if features.config != model.partition:
        raise ValueError(
            f"descriptor partition {features.config} does not match model {model.partition}"
        )
    if len(features.regions) != len(model.regions):
        raise ValueError("region count mismatch between descriptors and model")
    parts = []
    for reg, vec in zip(model.regions, features.regions):
        if vec.shape != (reg.input_dim,):
            raise ValueError(
                f"region {reg.region_index}: descriptor length {vec.shape} != model input {reg.input_dim}"
            )
        parts.append(reg.projection.T @ vec)
    return ProjectedFace(parts=parts)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Plain cosine similarity; zero-norm input is an error."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("cosine expects two equal-length vectors")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm input")
    return float(np.dot(a, b) / (na * nb))


def _safe_cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def score(model: EpfdaModel, a: ProjectedFace, b: ProjectedFace, weighted: bool = False) -> float:
    """Sum of per-region cosines, weighted by model.weights on request.

    Regions where either face projects to the zero vector contribute 0.
    """
    if len(a.parts) != len(b.parts) or len(a.parts) != len(model.regions):
        raise ValueError("faces and model disagree on region count")
    total = 0.0
    for j, (pa, pb) in enumerate(zip(a.parts, b.parts)):
        s = _safe_cosine(pa, pb)
        total += float(model.weights[j]) * s if weighted else s
    return total


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.where(norms == 0.0, 1.0, norms)


def region_similarity_matrix(
    probe_faces: list[ProjectedFace], gallery_faces: list[ProjectedFace], region: int
) -> np.ndarray:
    """(n_probe, n_gallery) cosine matrix for one region (zero-norm rows give 0)."""
    p = _unit_rows(np.stack([f.parts[region] for f in probe_faces]))
    g = _unit_rows(np.stack([f.parts[region] for f in gallery_faces]))
    return p @ g.T


def score_matrix(
    model: EpfdaModel,
    probe_faces: list[ProjectedFace],
    gallery_faces: list[ProjectedFace],
    weighted: bool = False,
) -> np.ndarray:
    """All probe-vs-gallery scores at once; same accumulation order per cell."""
    np_, ng = len(probe_faces), len(gallery_faces)
    if np_ == 0 or ng == 0:
        raise ValueError("need at least one probe and one gallery face")
    total = np.zeros((np_, ng))
    for j in range(len(model.regions)):
        w = float(model.weights[j]) if weighted else 1.0
        total += w * region_similarity_matrix(probe_faces, gallery_faces, j)
    return total


def learn_weights(
    model: EpfdaModel,
    gallery: list[tuple[ProjectedFace, str]],
    probe: list[tuple[ProjectedFace, str]],
) -> np.ndarray:
    """Per-region nearest-gallery accuracy on a labeled split.

    Each region classifies every probe by its single most similar
    gallery face (first index wins ties); the region's weight is the
    fraction it gets right.  Weights are used as-is, no normalization.
    """
    if not gallery or not probe:
        raise ValueError("need non-empty gallery and probe sets to learn weights")
    gal_faces = [f for f, _ in gallery]
    gal_labels = [lab for _, lab in gallery]
    prb_faces = [f for f, _ in probe]
    prb_labels = [lab for _, lab in probe]
    weights = np.zeros(len(model.regions))
    for j in range(len(model.regions)):
        sims = region_similarity_matrix(prb_faces, gal_faces, j)
        best = np.argmax(sims, axis=1)
        hits = sum(1 for i, b in enumerate(best) if gal_labels[b] == prb_labels[i])
        weights[j] = hits / len(probe)
    return weights


# ---------------------------------------------------------------------------
# model file format
#
# little-endian binary:
#   magic 'GSFM', version u32
#   variant u8, preprocess_enabled u8, weighted u8
#   preprocess params: 5 x f64 (gamma, sigma_inner, sigma_outer, alpha, tau)
#   gabor: u32 scales, u32 orientations, f64 kmax, f64 f, f64 sigma
#   partition: u32 m_rows, u32 n_cols, u32 sub_regions, u32 levels
#   per region (m*n of them): u32 input_dim, u32 output_dim, u32 class_count,
#       input_dim*output_dim f64 (row-major)
#   m*n f64 region weights

_MAGIC = b"GSFM"
_VERSION = 1
_VARIANT_TAGS = {
    GsfVariant.GSF3: 0,
    GsfVariant.GSF1: 1,
    GsfVariant.GSF2: 2,
    GsfVariant.LGBP: 3,
    GsfVariant.RAWDOWN: 4,
}
_TAG_VARIANTS = {v: k for k, v in _VARIANT_TAGS.items()}


def save_model(model: EpfdaModel, path: str | os.PathLike) -> None:
    chunks = [
        _MAGIC,
        struct.pack("<I", _VERSION),
        struct.pack(
            "<3B", _VARIANT_TAGS[model.variant], int(model.preprocess_enabled),
            int(model.weighted),
        ),
        struct.pack(
            "<5d", model.pre.gamma, model.pre.dog_sigma_inner,
            model.pre.dog_sigma_outer, model.pre.alpha, model.pre.tau,
        ),
        struct.pack(
            "<2I3d", model.gabor.num_scales, model.gabor.num_orientations,
            model.gabor.k_max, model.gabor.f, model.gabor.sigma,
        ),
        struct.pack(
            "<4I", model.partition.m_rows, model.partition.n_cols,
            model.partition.sub_regions, model.partition.levels,
        ),
    ]
    for reg in model.regions:
        mat = np.ascontiguousarray(reg.projection, dtype="<f8")
        chunks.append(struct.pack("<3I", reg.input_dim, reg.output_dim, reg.class_count))
        chunks.append(mat.tobytes())
    chunks.append(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise ValueError(f"{self.path}: truncated model file")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def array(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.pos + size > len(self.data):
            raise ValueError(f"{self.path}: truncated model file")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.pos)
        self.pos += size
        return arr.astype(np.float64)


def load_model(path: str | os.PathLike) -> EpfdaModel:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a model file (bad magic)")
    rd = _Reader(data, path)
    rd.pos = 4
    (version,) = rd.take("<I")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    vtag, pp_on, weighted = rd.take("<3B")
    if vtag not in _TAG_VARIANTS:
        raise ValueError(f"{path}: unknown feature variant tag {vtag}")
    gamma, s_in, s_out, alpha, tau = rd.take("<5d")
    scales, orients, kmax, f, sigma = rd.take("<2I3d")
    m, n, sub, levels = rd.take("<4I")
    try:
        pre = PreprocessParams(gamma, s_in, s_out, alpha, tau)
        gabor = GaborBankParams(scales, orients, kmax, f, sigma)
        part = PartitionConfig(m, n, sub, levels)
    except ValueError as exc:
        raise ValueError(f"{path}: invalid stored parameters ({exc})") from exc
    regions = []
    for j in range(part.num_regions):
        in_dim, out_dim, class_count = rd.take("<3I")
        if in_dim == 0 or out_dim == 0 or out_dim > in_dim:
            raise ValueError(f"{path}: region {j} has bad projection shape {in_dim}x{out_dim}")
        mat = rd.array(in_dim * out_dim).reshape(in_dim, out_dim)
        regions.append(FdaRegionModel(region_index=j, projection=mat, class_count=class_count))
    weights = rd.array(part.num_regions)
    if rd.pos != len(data):
        raise ValueError(f"{path}: {len(data) - rd.pos} trailing bytes")
    return EpfdaModel(
        regions=regions,
        weights=weights,
        partition=part,
        variant=_TAG_VARIANTS[vtag],
        gabor=gabor,
        pre=pre,
        preprocess_enabled=bool(pp_on),
        weighted=bool(weighted),
    )
