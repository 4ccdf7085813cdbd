"""End-to-end face pipeline: extraction, training, evaluation, reports.

Identification protocol: every probe is scored against every gallery
face, the top-scoring gallery entry decides the identity, and rank-1
rate is the fraction of probes decided correctly.  Feature extraction
parallelizes over images with a process pool sized by the GSF_THREADS
environment variable (serial when 1); results are returned in input
order, so worker count never changes any output byte.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from gsf.codes import CODE_VARIANTS, GsfVariant, derivatives, gsf_code_map, lgbp_code_map
from gsf.config import PipelineConfig
from gsf.gabor import compute_gmps
from gsf.hist import HistogramSequence, region_histograms, region_rawdown
from gsf.imgio import DatasetManifest, load_image
from gsf.preprocess import preprocess
from gsf.subspace import (
    EpfdaModel,
    ProjectedFace,
    learn_weights,
    project,
    score_matrix,
    train_fda_region,
)

THREADS_ENV = "GSF_THREADS"


def worker_count(explicit: int | None = None) -> int:
    """Resolve the extraction worker count: argument, then GSF_THREADS, then 1."""
    if explicit is not None:
        if explicit < 1:
            raise ValueError("worker count must be at least 1")
        return explicit
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be at least 1, got {n}")
        return n
    return 1


def extract_features(img: np.ndarray, cfg: PipelineConfig) -> HistogramSequence:
    """Image (2-D float array) to regional descriptor sequence."""
    x = np.asarray(img, dtype=np.float64)
    if cfg.preprocess_enabled:
        x = preprocess(x, cfg.pre)
    gmps = compute_gmps(x, cfg.gabor)
    part = cfg.partition
    if cfg.variant in CODE_VARIANTS:
        maps = [gsf_code_map(derivatives(g), cfg.variant) for g in gmps]
        return region_histograms(maps, part)
    if cfg.variant == GsfVariant.LGBP:
        maps = [lgbp_code_map(g, cfg.lgbp_levels) for g in gmps]
        return region_histograms(maps, part)
    stacks = [derivatives(g) for g in gmps]
    return region_rawdown(stacks, part)


def _extract_path(path: Path, cfg: PipelineConfig) -> HistogramSequence:
    return extract_features(load_image(path), cfg)


def extract_many(paths, cfg: PipelineConfig, workers: int | None = None) -> list[HistogramSequence]:
    """Extract descriptors for many image paths, preserving input order."""
    paths = [Path(p) for p in paths]
    n = worker_count(workers)
    job = partial(_extract_path, cfg=cfg)
    if n <= 1 or len(paths) <= 1:
        return [job(p) for p in paths]
    chunk = max(1, len(paths) // (n * 4))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(job, paths, chunksize=chunk))


def config_for_model(model: EpfdaModel) -> PipelineConfig:
    """Rebuild the extraction config a stored model implies."""
    return PipelineConfig(
        preprocess_enabled=model.preprocess_enabled,
        pre=model.pre,
        gabor=model.gabor,
        variant=model.variant,
        lgbp_levels=model.partition.levels if model.variant == GsfVariant.LGBP else 8,
        m_rows=model.partition.m_rows,
        n_cols=model.partition.n_cols,
        sub_regions=model.partition.sub_regions,
    )


def train(manifest: DatasetManifest, cfg: PipelineConfig, workers: int | None = None) -> EpfdaModel:
    """Fit per-region subspaces (and optionally weights) from the train split.

    Needs at least two subjects and at least one subject with two or
    more images.  When weights are enabled, the first train image of
    each subject acts as a pseudo-gallery and the remainder as pseudo-
    probes for estimating per-region reliability.
    """
    entries = manifest.split("train")
    if not entries:
        raise ValueError("manifest has no train entries")
    for e in entries:
        if not e.subject:
            raise ValueError(f"train entry without subject label: {e.path}")
    subjects = sorted({e.subject for e in entries})
    if len(subjects) < 2:
        raise ValueError("training needs at least two subjects")
    if len(entries) <= len(subjects):
        raise ValueError("training needs a subject with at least two images")
    index = {s: i for i, s in enumerate(subjects)}
    labels = np.array([index[e.subject] for e in entries])

    feats = extract_many([e.path for e in entries], cfg, workers)
    part = cfg.partition
    regions = []
    for j in range(part.num_regions):
        x = np.stack([f.regions[j] for f in feats])
        regions.append(
            train_fda_region(
                x, labels, cfg.fda.num_components,
                ridge=cfg.fda.ridge, pca_var=cfg.fda.pca_var, region_index=j,
            )
        )
    model = EpfdaModel(
        regions=regions,
        weights=np.ones(part.num_regions),
        partition=part,
        variant=cfg.variant,
        gabor=cfg.gabor,
        pre=cfg.pre,
        preprocess_enabled=cfg.preprocess_enabled,
        weighted=cfg.weighted,
    )
    if cfg.weighted:
        projected = [project(model, f) for f in feats]
        seen: set[str] = set()
        gal, prb = [], []
        for e, face in zip(entries, projected):
            if e.subject in seen:
                prb.append((face, e.subject))
            else:
                seen.add(e.subject)
                gal.append((face, e.subject))
        model.weights = learn_weights(model, gal, prb)
    return model


@dataclass(eq=False)
class Decision:
    probe_path: str
    predicted: str
    actual: str
    score: float
    rank: int  # 1-based rank of the true subject, 0 if absent from gallery
    hit: bool


@dataclass(eq=False)
class EvalReport:
    decisions: list[Decision]
    rank1_rate: float
    num_probes: int
    num_gallery: int
    weighted: bool
    config_line: str


def _subject_rank(scores: np.ndarray, gal_subjects: list[str], actual: str) -> int:
    # collapse gallery entries to one best score per subject, then rank
    best: dict[str, float] = {}
    order: dict[str, int] = {}
    for i, (subj, sc) in enumerate(zip(gal_subjects, scores)):
        if subj not in best or sc > best[subj]:
            if subj not in best:
                order[subj] = i
            best[subj] = float(sc)
    if actual not in best:
        return 0
    ranked = sorted(best, key=lambda s: (-best[s], order[s]))
    return 1 + ranked.index(actual)


def _config_line(model: EpfdaModel) -> str:
    g, p, q = model.gabor, model.pre, model.partition
    return (
        f"variant={model.variant.value} preprocess={int(model.preprocess_enabled)}"
        f" weighted={int(model.weighted)} scales={g.num_scales} orientations={g.num_orientations}"
        f" kmax={g.k_max!r} f={g.f!r} sigma={g.sigma!r}"
        f" gamma={p.gamma!r} sigma_inner={p.dog_sigma_inner!r} sigma_outer={p.dog_sigma_outer!r}"
        f" alpha={p.alpha!r} tau={p.tau!r}"
        f" m={q.m_rows} n={q.n_cols} s={q.sub_regions} levels={q.levels}"
    )


def evaluate(
    model: EpfdaModel,
    manifest: DatasetManifest,
    weighted: bool | None = None,
    workers: int | None = None,
) -> EvalReport:
    """Score every probe against the gallery and tabulate rank-1 decisions.

    ``weighted`` defaults to the model's own setting.  Ties on the top
    score go to the earliest gallery entry.
    """
    if weighted is None:
        weighted = model.weighted
    gal = manifest.split("gallery")
    prb = manifest.split("probe")
    if not gal or not prb:
        raise ValueError("evaluation needs non-empty gallery and probe splits")
    cfg = config_for_model(model)
    gal_feats = extract_many([e.path for e in gal], cfg, workers)
    prb_feats = extract_many([e.path for e in prb], cfg, workers)
    gal_faces = [project(model, f) for f in gal_feats]
    prb_faces = [project(model, f) for f in prb_feats]
    gal_subjects = [e.subject for e in gal]

    scores = score_matrix(model, prb_faces, gal_faces, weighted=weighted)
    decisions = []
    hits = 0
    for i, e in enumerate(prb):
        row = scores[i]
        top = int(np.argmax(row))
        predicted = gal_subjects[top]
        hit = predicted == e.subject
        hits += int(hit)
        decisions.append(
            Decision(
                probe_path=str(e.path),
                predicted=predicted,
                actual=e.subject,
                score=float(row[top]),
                rank=_subject_rank(row, gal_subjects, e.subject),
                hit=hit,
            )
        )
    return EvalReport(
        decisions=decisions,
        rank1_rate=hits / len(prb),
        num_probes=len(prb),
        num_gallery=len(gal),
        weighted=weighted,
        config_line=_config_line(model),
    )


def format_report(report: EvalReport) -> str:
    """Tab-separated decision lines plus a machine-readable summary."""
    absent = sum(1 for d in report.decisions if d.rank == 0)
    lines = [
        f"# config: {report.config_line}",
        f"# gallery={report.num_gallery} probes={report.num_probes}"
        f" absent_from_gallery={absent}",
        "# probe\tpredicted\tactual\tscore\trank\thit",
    ]
    for d in report.decisions:
        lines.append(
            f"{d.probe_path}\t{d.predicted}\t{d.actual}\t{d.score!r}\t{d.rank}\t{int(d.hit)}"
        )
    lines.append(f"rank1 = {report.rank1_rate:.6f}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path: str | os.PathLike) -> None:
    Path(path).write_text(format_report(report))
