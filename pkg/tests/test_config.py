import pytest

from gsf.codes import GsfVariant
from gsf.config import PipelineConfig, default_config, load_config, parse_config


class TestDefaults:
    def test_default_shape(self):
        cfg = default_config()
        assert cfg.variant == GsfVariant.GSF1
        assert (cfg.m_rows, cfg.n_cols, cfg.sub_regions) == (10, 4, 2)
        assert cfg.partition.levels == 16
        assert cfg.preprocess_enabled and not cfg.weighted
        assert cfg.fda.num_components == 200

    def test_levels_follow_variant(self):
        assert PipelineConfig(variant=GsfVariant.GSF3).partition.levels == 8
        assert PipelineConfig(variant=GsfVariant.GSF2).partition.levels == 16
        assert PipelineConfig(variant=GsfVariant.RAWDOWN).partition.levels == 16
        assert PipelineConfig(variant=GsfVariant.LGBP, lgbp_levels=32).partition.levels == 32


class TestParsing:
    def test_full_example(self):
        cfg = parse_config(
            """
            # comment line
            pp.enabled = false
            gabor.scales = 3          # trailing comment
            gabor.kmax = 0.7853981633974483
            feature.variant = gsf2
            part.m = 6
            part.n = 5
            part.s = 4
            fda.r = 25
            fda.ridge = 0.001
            weights.enabled = true
            """
        )
        assert cfg.preprocess_enabled is False
        assert cfg.gabor.num_scales == 3
        assert cfg.gabor.k_max == pytest.approx(0.7853981633974483)
        assert cfg.variant == GsfVariant.GSF2
        assert (cfg.m_rows, cfg.n_cols, cfg.sub_regions) == (6, 5, 4)
        assert cfg.fda.num_components == 25
        assert cfg.fda.ridge == pytest.approx(0.001)
        assert cfg.weighted is True

    def test_presets(self):
        feret = parse_config("part.preset = feret\n")
        assert (feret.m_rows, feret.n_cols, feret.sub_regions) == (10, 4, 2)
        orl = parse_config("part.preset = orl\n")
        assert (orl.m_rows, orl.n_cols, orl.sub_regions) == (5, 4, 1)

    def test_explicit_overrides_preset_in_any_order(self):
        a = parse_config("part.preset = orl\npart.m = 7\n")
        b = parse_config("part.m = 7\npart.preset = orl\n")
        for cfg in (a, b):
            assert (cfg.m_rows, cfg.n_cols, cfg.sub_regions) == (7, 4, 1)

    def test_duplicate_key_last_wins(self):
        cfg = parse_config("fda.r = 10\nfda.r = 99\n")
        assert cfg.fda.num_components == 99

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config key 'fda.rank'"):
            parse_config("fda.rank = 10\n")

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError, match="preset"):
            parse_config("part.preset = lfw\n")

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            parse_config("feature.variant = hog\n")

    def test_bad_number_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            parse_config("gabor.scales = many\n")
        with pytest.raises(ValueError, match="number"):
            parse_config("fda.ridge = tiny\n")

    def test_bad_bool_rejected(self):
        with pytest.raises(ValueError, match="boolean"):
            parse_config("pp.enabled = maybe\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            parse_config("just some words\n")

    def test_empty_value_rejected(self):
        with pytest.raises(ValueError, match="empty value"):
            parse_config("fda.r =\n")

    def test_lgbp_levels_validated(self):
        cfg = parse_config("feature.variant = lgbp\nfeature.lgbp_levels = 16\n")
        assert cfg.partition.levels == 16
        with pytest.raises(ValueError, match="256"):
            parse_config("feature.variant = lgbp\nfeature.lgbp_levels = 7\n")

    def test_out_of_range_values_rejected(self):
        with pytest.raises(ValueError):
            parse_config("pp.gamma = 0\n")
        with pytest.raises(ValueError):
            parse_config("gabor.f = 0.5\n")
        with pytest.raises(ValueError):
            parse_config("part.s = 3\n")
        with pytest.raises(ValueError):
            parse_config("fda.pca_var = 1.5\n")


class TestLoadConfig:
    def test_reads_file(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("feature.variant = gsf3\n")
        assert load_config(p).variant == GsfVariant.GSF3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError, match="no such config"):
            load_config(tmp_path / "none.cfg")

    def test_error_names_file_and_line(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("pp.enabled = true\nwat.is = this\n")
        with pytest.raises(ValueError, match=r"run\.cfg:2"):
            load_config(p)
