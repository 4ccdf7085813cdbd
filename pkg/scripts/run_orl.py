"""Identification run on an AT&T/ORL-style archive (s1/1.pgm ... s40/10.pgm).

The first N images of each subject (numeric order) serve as both
training and gallery; the rest are probes.  Uses the 5x4 grid with
whole-region histograms and a 39-dimensional discriminant per region,
the setup suited to 40-subject archives.

    python scripts/run_orl.py /data/orl
    python scripts/run_orl.py /data/orl --references 5 --variant gsf2
"""

import argparse
import logging
import tempfile
import time
from pathlib import Path

from gsf.codes import GsfVariant
from gsf.config import FdaParams, PipelineConfig
from gsf.imgio import load_manifest, scan_subject_dirs, write_manifest
from gsf.pipeline import evaluate, train, worker_count, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root", help="archive directory with one subdirectory per subject")
    ap.add_argument("--references", type=int, default=3,
                    help="images per subject used for train+gallery")
    ap.add_argument("--variant", default="gsf1",
                    choices=[v.value for v in GsfVariant])
    ap.add_argument("--components", type=int, default=39,
                    help="discriminant dimensions per region")
    ap.add_argument("--weighted", action="store_true",
                    help="learn per-region weights from the training split")
    ap.add_argument("--model-out", default=None, help="save the trained model here")
    ap.add_argument("--report-out", default=None, help="write the evaluation report here")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("-v", "--verbose", action="store_true",
                    help="show per-region training log messages")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR)

    rows = scan_subject_dirs(args.root, references=args.references)
    with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as fh:
        manifest_path = Path(fh.name)
    write_manifest(rows, manifest_path)
    man = load_manifest(manifest_path)

    cfg = PipelineConfig(
        preprocess_enabled=False,
        variant=GsfVariant(args.variant),
        m_rows=5, n_cols=4, sub_regions=1,
        fda=FdaParams(num_components=args.components),
        weighted=args.weighted,
    )
    workers = worker_count(args.workers)
    subjects = len({r[1] for r in rows})
    print(f"{subjects} subjects, {len(man.split('probe'))} probes, workers={workers}")

    t0 = time.perf_counter()
    model = train(man, cfg, workers=workers)
    t1 = time.perf_counter()
    report = evaluate(model, man, workers=workers)
    t2 = time.perf_counter()
    print(f"train {t1 - t0:.1f}s, evaluate {t2 - t1:.1f}s")
    print(f"rank1 = {report.rank1_rate:.6f}")

    if args.model_out:
        from gsf.subspace import save_model
        save_model(model, args.model_out)
        print(f"model -> {args.model_out}")
    if args.report_out:
        write_report(report, args.report_out)
        print(f"report -> {args.report_out}")


if __name__ == "__main__":
    main()
