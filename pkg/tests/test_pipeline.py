import os
import subprocess
import sys

import numpy as np
import pytest

from gsf.cli import main as cli_main
from gsf.codes import GsfVariant
from gsf.config import PipelineConfig, parse_config
from gsf.imgio import load_manifest, save_image, write_manifest
from gsf.pipeline import (
    config_for_model,
    evaluate,
    extract_features,
    extract_many,
    format_report,
    train,
    worker_count,
)
from gsf.subspace import load_model, save_model
from gsf.synthetic import SyntheticSpec, band_texture, write_dataset

FAST_CFG = PipelineConfig(
    preprocess_enabled=False,
    variant=GsfVariant.GSF1,
    m_rows=4, n_cols=2, sub_regions=2,
)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("tinyset")
    spec = SyntheticSpec(
        num_subjects=6, instances_per_subject=4,
        train_per_subject=2, gallery_per_subject=1,
        height=32, width=24, seed=11,
    )
    return load_manifest(write_dataset(out, spec))


@pytest.fixture(scope="module")
def tiny_model(tiny_dataset):
    return train(tiny_dataset, FAST_CFG)


class TestWorkerCount:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("GSF_THREADS", "5")
        assert worker_count(3) == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("GSF_THREADS", "5")
        assert worker_count() == 5

    def test_default_serial(self, monkeypatch):
        monkeypatch.delenv("GSF_THREADS", raising=False)
        assert worker_count() == 1

    def test_invalid_env_rejected(self, monkeypatch):
        monkeypatch.setenv("GSF_THREADS", "many")
        with pytest.raises(ValueError, match="GSF_THREADS"):
            worker_count()
        monkeypatch.setenv("GSF_THREADS", "0")
        with pytest.raises(ValueError, match="GSF_THREADS"):
            worker_count()


class TestExtractFeatures:
    def test_descriptor_lengths_per_variant(self, rng):
        img = rng.random((32, 24))
        base = dict(preprocess_enabled=False, m_rows=4, n_cols=2, sub_regions=2)
        cases = {
            GsfVariant.GSF3: 2 * 40 * 8,
            GsfVariant.GSF1: 2 * 40 * 16,
            GsfVariant.GSF2: 2 * 40 * 16,
            GsfVariant.LGBP: 2 * 40 * 8,
            GsfVariant.RAWDOWN: 2 * 40 * 16,
        }
        for variant, length in cases.items():
            cfg = PipelineConfig(variant=variant, **base)
            seq = extract_features(img, cfg)
            assert len(seq.regions) == 8
            assert seq.region_length == length

    def test_preprocess_toggle_changes_features(self, rng):
        img = rng.random((32, 24)) + 0.05
        on = extract_features(img, PipelineConfig(m_rows=4, n_cols=2))
        off = extract_features(img, PipelineConfig(m_rows=4, n_cols=2, preprocess_enabled=False))
        assert not all(np.array_equal(a, b) for a, b in zip(on.regions, off.regions))

    def test_parallel_matches_serial_exactly(self, tiny_dataset):
        paths = [e.path for e in tiny_dataset.entries[:6]]
        serial = extract_many(paths, FAST_CFG, workers=1)
        parallel = extract_many(paths, FAST_CFG, workers=3)
        for a, b in zip(serial, parallel):
            for ra, rb in zip(a.regions, b.regions):
                assert np.array_equal(ra, rb)


class TestTrain:
    def test_validations(self, tmp_path, rng):
        save_image(rng.random((32, 24)), tmp_path / "a.pgm")
        save_image(rng.random((32, 24)), tmp_path / "b.pgm")

        write_manifest([("a.pgm", "s1", "probe")], tmp_path / "m1.txt")
        with pytest.raises(ValueError, match="no train"):
            train(load_manifest(tmp_path / "m1.txt"), FAST_CFG)

        write_manifest(
            [("a.pgm", "s1", "train"), ("b.pgm", "s1", "train")], tmp_path / "m2.txt"
        )
        with pytest.raises(ValueError, match="two subjects"):
            train(load_manifest(tmp_path / "m2.txt"), FAST_CFG)

        write_manifest(
            [("a.pgm", "s1", "train"), ("b.pgm", "s2", "train")], tmp_path / "m3.txt"
        )
        with pytest.raises(ValueError, match="at least two images"):
            train(load_manifest(tmp_path / "m3.txt"), FAST_CFG)

        write_manifest(
            [("a.pgm", "", "train"), ("b.pgm", "s2", "train")], tmp_path / "m4.txt"
        )
        with pytest.raises(ValueError, match="without subject"):
            train(load_manifest(tmp_path / "m4.txt"), FAST_CFG)

    def test_unweighted_model_has_unit_weights(self, tiny_model):
        assert np.array_equal(tiny_model.weights, np.ones(8))
        assert tiny_model.weighted is False

    def test_weighted_training_learns_weights(self, tiny_dataset):
        cfg = PipelineConfig(
            preprocess_enabled=False, variant=GsfVariant.GSF1,
            m_rows=4, n_cols=2, sub_regions=2, weighted=True,
        )
        model = train(tiny_dataset, cfg)
        assert model.weighted is True
        assert np.all(model.weights >= 0.0) and np.all(model.weights <= 1.0)


class TestEvaluate:
    def test_self_consistency_rank1(self, tiny_model, tiny_dataset):
        report = evaluate(tiny_model, tiny_dataset)
        assert report.rank1_rate == 1.0
        assert report.num_probes == 6
        assert report.num_gallery == 6

    def test_probe_identical_to_gallery_hits_max_score(self, tiny_model, tiny_dataset, tmp_path):
        # reuse a gallery image file as the probe: every region cosine is
        # 1, so the total is the region count
        rows = []
        gal = tiny_dataset.split("gallery")
        for e in gal:
            rows.append((str(e.path), e.subject, "gallery"))
        rows.append((str(gal[0].path), gal[0].subject, "probe"))
        write_manifest(rows, tmp_path / "m.txt")
        report = evaluate(tiny_model, load_manifest(tmp_path / "m.txt"), weighted=False)
        d = report.decisions[0]
        assert d.hit and d.rank == 1
        assert d.score == pytest.approx(8.0, abs=1e-9)

    def test_absent_subject_flagged_rank_zero(self, tiny_model, tiny_dataset, tmp_path):
        gal = tiny_dataset.split("gallery")
        prb = tiny_dataset.split("probe")
        rows = [(str(e.path), e.subject, "gallery") for e in gal[1:]]
        rows.append((str(prb[0].path), prb[0].subject, "probe"))  # subject of gal[0]
        write_manifest(rows, tmp_path / "m.txt")
        report = evaluate(tiny_model, load_manifest(tmp_path / "m.txt"))
        assert report.decisions[0].rank == 0
        assert not report.decisions[0].hit
        assert "absent_from_gallery=1" in format_report(report)

    def test_empty_split_rejected(self, tiny_model, tiny_dataset, tmp_path):
        rows = [(str(e.path), e.subject, "gallery") for e in tiny_dataset.split("gallery")]
        write_manifest(rows, tmp_path / "m.txt")
        with pytest.raises(ValueError, match="non-empty"):
            evaluate(tiny_model, load_manifest(tmp_path / "m.txt"))

    def test_report_format(self, tiny_model, tiny_dataset):
        report = evaluate(tiny_model, tiny_dataset)
        text = format_report(report)
        lines = text.splitlines()
        assert lines[0].startswith("# config: variant=gsf1")
        assert lines[1].startswith("# gallery=6 probes=6")
        assert lines[2].startswith("# probe\t")
        body = [l for l in lines if not l.startswith("#")]
        assert len(body) == 6 + 1
        assert lines[-1] == f"rank1 = {report.rank1_rate:.6f}"
        for row in body[:-1]:
            fields = row.split("\t")
            assert len(fields) == 6
            float(fields[3])  # score parses

    def test_weighted_flag_defaults_to_model(self, tiny_dataset):
        cfg = PipelineConfig(
            preprocess_enabled=False, variant=GsfVariant.GSF1,
            m_rows=4, n_cols=2, sub_regions=2, weighted=True,
        )
        model = train(tiny_dataset, cfg)
        by_default = evaluate(model, tiny_dataset)
        explicit = evaluate(model, tiny_dataset, weighted=True)
        assert format_report(by_default) == format_report(explicit)


class TestModelRoundTripThroughPipeline:
    def test_reports_identical_after_reload(self, tiny_model, tiny_dataset, tmp_path):
        p = tmp_path / "m.gsfm"
        save_model(tiny_model, p)
        back = load_model(p)
        a = format_report(evaluate(tiny_model, tiny_dataset))
        b = format_report(evaluate(back, tiny_dataset))
        assert a == b

    def test_config_for_model_reproduces_extraction(self, tiny_model, tiny_dataset):
        cfg = config_for_model(tiny_model)
        assert cfg.variant == tiny_model.variant
        assert cfg.partition == tiny_model.partition
        assert cfg.preprocess_enabled == tiny_model.preprocess_enabled


class TestSynthetic:
    def test_deterministic_bytes(self, tmp_path):
        spec = SyntheticSpec(num_subjects=3, instances_per_subject=4, height=24, width=20, seed=5)
        m1 = write_dataset(tmp_path / "a", spec)
        m2 = write_dataset(tmp_path / "b", spec)
        for e1, e2 in zip(load_manifest(m1).entries, load_manifest(m2).entries):
            assert e1.path.read_bytes() == e2.path.read_bytes()

    def test_split_counts(self, tiny_dataset):
        assert len(tiny_dataset.split("train")) == 12
        assert len(tiny_dataset.split("gallery")) == 6
        assert len(tiny_dataset.split("probe")) == 6

    def test_band_texture_range_and_structure(self):
        rng = np.random.default_rng(0)
        tex = band_texture(rng, 40, 32, 3.0, 10.0)
        assert tex.min() >= 0.0 and tex.max() <= 1.0
        assert tex.std() > 0.05  # not flat

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(num_subjects=1)
        with pytest.raises(ValueError):
            SyntheticSpec(instances_per_subject=3, train_per_subject=2, gallery_per_subject=1)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = SyntheticSpec(
        num_subjects=5, instances_per_subject=4,
        train_per_subject=2, gallery_per_subject=1,
        height=32, width=24, seed=21,
    )
    manifest = write_dataset(root / "data", spec)
    cfg = root / "run.cfg"
    cfg.write_text(
        "pp.enabled = false\nfeature.variant = gsf1\npart.m = 4\npart.n = 2\npart.s = 2\n"
    )
    return root, manifest, cfg


class TestCli:
    def test_train_then_weights(self, workspace, capsys):
        root, manifest, cfg = workspace
        model_path = root / "model.gsfm"
        rc = cli_main(["train", str(manifest), "--out", str(model_path), "--config", str(cfg)])
        assert rc == 0 and model_path.exists()
        capsys.readouterr()
        assert cli_main(["weights", str(model_path)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 4 and all(len(r.split()) == 2 for r in out)

    def test_match_prints_score(self, workspace, capsys):
        root, manifest, _ = workspace
        man = load_manifest(manifest)
        model_path = root / "model.gsfm"
        a = man.split("gallery")[0].path
        rc = cli_main(["match", str(model_path), str(a), str(a)])
        assert rc == 0
        val = float(capsys.readouterr().out.strip())
        assert val == pytest.approx(8.0, abs=1e-6)

    def test_evaluate_writes_report(self, workspace, capsys):
        root, manifest, _ = workspace
        report_path = root / "report.txt"
        rc = cli_main(
            ["evaluate", str(root / "model.gsfm"), str(manifest), "--out", str(report_path)]
        )
        assert rc == 0
        text = report_path.read_text()
        assert text.splitlines()[-1].startswith("rank1 = ")
        assert "rank1 = " in capsys.readouterr().out

    def test_extract_writes_descriptors(self, workspace, capsys):
        root, manifest, cfg = workspace
        out_dir = root / "feats"
        rc = cli_main(["extract", str(manifest), "--out", str(out_dir), "--config", str(cfg)])
        assert rc == 0
        index = (out_dir / "index.tsv").read_text().splitlines()
        assert len(index) == 20
        first = index[0].split("\t")
        vec = np.load(out_dir / first[0])
        assert vec.shape == (8 * 2 * 40 * 16,)

    def test_errors_exit_2(self, workspace, capsys):
        root, manifest, _ = workspace
        rc = cli_main(["train", str(manifest), "--out", str(root / "x.gsfm"),
                       "--config", str(root / "missing.cfg")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_module_entry_point(self, workspace):
        root, _, _ = workspace
        proc = subprocess.run(
            [sys.executable, "-m", "gsf", "weights", str(root / "model.gsfm")],
            capture_output=True, text=True,
            env={**os.environ, "GSF_THREADS": "1"},
        )
        assert proc.returncode == 0
        assert len(proc.stdout.strip().splitlines()) == 4
