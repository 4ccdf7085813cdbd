"""Command-line front end.

Subcommands: extract (descriptors to .npy files), train (fit and save a
model), match (score two images), evaluate (rank-1 report over a
manifest), weights (print a model's region weight grid).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from gsf.config import PipelineConfig, default_config, load_config
from gsf.imgio import load_image, load_manifest
from gsf.pipeline import (
    config_for_model,
    evaluate,
    extract_features,
    extract_many,
    format_report,
    train,
    worker_count,
    write_report,
)
from gsf.subspace import load_model, project, save_model, score


def _load_cfg(path: str | None) -> PipelineConfig:
    return load_config(path) if path else default_config()


def _cmd_extract(args) -> int:
    cfg = _load_cfg(args.config)
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    feats = extract_many([e.path for e in manifest.entries], cfg, worker_count(args.workers))
    index_lines = []
    for i, (entry, feat) in enumerate(zip(manifest.entries, feats)):
        name = f"feat_{i:05d}.npy"
        np.save(out / name, feat.concatenated())
        index_lines.append(f"{name}\t{entry.path}\t{entry.subject}\t{entry.role}")
    (out / "index.tsv").write_text("\n".join(index_lines) + "\n")
    print(f"wrote {len(feats)} descriptor files to {out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_cfg(args.config)
    manifest = load_manifest(args.manifest)
    model = train(manifest, cfg, worker_count(args.workers))
    save_model(model, args.out)
    dims = sorted({r.output_dim for r in model.regions})
    print(
        f"trained {len(model.regions)} regions"
        f" (subspace dims {dims[0]}..{dims[-1]}) -> {args.out}"
    )
    return 0


def _cmd_match(args) -> int:
    model = load_model(args.model)
    cfg = config_for_model(model)
    fa = project(model, extract_features(load_image(args.image_a), cfg))
    fb = project(model, extract_features(load_image(args.image_b), cfg))
    value = score(model, fa, fb, weighted=model.weighted)
    print(f"{value:.10g}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    weighted = None
    if args.weighted:
        weighted = True
    elif args.unweighted:
        weighted = False
    report = evaluate(model, manifest, weighted=weighted, workers=worker_count(args.workers))
    if args.out:
        write_report(report, args.out)
        print(f"rank1 = {report.rank1_rate:.6f} ({report.num_probes} probes) -> {args.out}")
    else:
        sys.stdout.write(format_report(report))
    return 0


def _cmd_weights(args) -> int:
    model = load_model(args.model)
    m, n = model.partition.m_rows, model.partition.n_cols
    grid = np.asarray(model.weights).reshape(m, n)
    for row in grid:
        print(" ".join(f"{v:.4f}" for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsf", description="Gabor surface feature face matcher")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, with_config=True):
        if with_config:
            p.add_argument("--config", help="key = value config file (defaults apply otherwise)")
        p.add_argument("--workers", type=int, default=None,
                       help="extraction processes (default: GSF_THREADS or 1)")

    p = sub.add_parser("extract", help="write per-image descriptors as .npy files")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output directory")
    add_common(p)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("train", help="fit region subspaces from the train split")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="model file to write")
    add_common(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("match", help="score two images under a trained model")
    p.add_argument("model")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.set_defaults(fn=_cmd_match)

    p = sub.add_parser("evaluate", help="rank-1 identification over gallery/probe splits")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--out", help="report file (stdout if omitted)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--weighted", action="store_true", help="force weighted scoring")
    g.add_argument("--unweighted", action="store_true", help="force unweighted scoring")
    add_common(p, with_config=False)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("weights", help="print the region weight grid of a model")
    p.add_argument("model")
    p.set_defaults(fn=_cmd_weights)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
