"""Pipeline configuration and its plain-text file format.

Config files are ``key = value`` lines; blank lines and '#' comments
are ignored, unknown keys are an error, later duplicates win.  The
histogram bin count is not a free knob: it follows the feature variant
(8 for gsf3, 16 for gsf1/gsf2 and the real-valued ablation, the level
count for lgbp).  Two grid presets cover the common evaluation setups;
explicit part.* keys override whatever a preset chose.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from gsf.codes import GSF_ALPHABETS, GsfVariant
from gsf.gabor import GaborBankParams
from gsf.hist import PartitionConfig
from gsf.preprocess import PreprocessParams

PARTITION_PRESETS = {
    "feret": (10, 4, 2),  # m_rows, n_cols, sub_regions
    "orl": (5, 4, 1),
}


@dataclass(frozen=True)
class FdaParams:
    num_components: int = 200
    ridge: float = 1e-4
    pca_var: float = 0.99

    def __post_init__(self):
        if self.num_components < 1:
            raise ValueError("fda.r must be positive")
        if self.ridge < 0.0:
            raise ValueError("fda.ridge must be nonnegative")
        if not 0.0 < self.pca_var <= 1.0:
            raise ValueError("fda.pca_var must be in (0, 1]")


def levels_for(variant: GsfVariant, lgbp_levels: int = 8) -> int:
    if variant in GSF_ALPHABETS:
        return GSF_ALPHABETS[variant]
    if variant == GsfVariant.LGBP:
        return lgbp_levels
    return 16  # rawdown: keeps descriptor lengths comparable to gsf1/gsf2


@dataclass(frozen=True)
class PipelineConfig:
    preprocess_enabled: bool = True
    pre: PreprocessParams = field(default_factory=PreprocessParams)
    gabor: GaborBankParams = field(default_factory=GaborBankParams)
    variant: GsfVariant = GsfVariant.GSF1
    lgbp_levels: int = 8
    m_rows: int = 10
    n_cols: int = 4
    sub_regions: int = 2
    fda: FdaParams = field(default_factory=FdaParams)
    weighted: bool = False

    def __post_init__(self):
        if self.variant == GsfVariant.LGBP and not (
            1 <= self.lgbp_levels <= 256 and 256 % self.lgbp_levels == 0
        ):
            raise ValueError(f"feature.lgbp_levels must divide 256, got {self.lgbp_levels}")
        # grid range checks live in PartitionConfig
        self.partition  # noqa: B018

    @property
    def partition(self) -> PartitionConfig:
        return PartitionConfig(
            m_rows=self.m_rows,
            n_cols=self.n_cols,
            sub_regions=self.sub_regions,
            levels=levels_for(self.variant, self.lgbp_levels),
        )


def default_config() -> PipelineConfig:
    return PipelineConfig()


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _to_bool(key, raw):
    try:
        return _BOOL_WORDS[raw.lower()]
    except KeyError:
        raise ValueError(f"{key}: expected a boolean, got {raw!r}") from None


def _to_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{key}: expected an integer, got {raw!r}") from None


def _to_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{key}: expected a number, got {raw!r}") from None


_KNOWN_KEYS = {
    "pp.enabled", "pp.gamma", "pp.sigma_inner", "pp.sigma_outer", "pp.alpha", "pp.tau",
    "gabor.scales", "gabor.orientations", "gabor.kmax", "gabor.f", "gabor.sigma",
    "feature.variant", "feature.lgbp_levels",
    "part.preset", "part.m", "part.n", "part.s",
    "fda.r", "fda.ridge", "fda.pca_var",
    "weights.enabled",
}


def parse_config(text: str, source: str = "<config>") -> PipelineConfig:
    """Parse ``key = value`` lines into a PipelineConfig (defaults fill gaps)."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        if not val:
            raise ValueError(f"{source}:{lineno}: empty value for {key}")
        values[key] = val

    def put(kwargs, dst, key, conv):
        if key in values:
            kwargs[dst] = conv(key, values[key])

    pre_kw: dict = {}
    put(pre_kw, "gamma", "pp.gamma", _to_float)
    put(pre_kw, "dog_sigma_inner", "pp.sigma_inner", _to_float)
    put(pre_kw, "dog_sigma_outer", "pp.sigma_outer", _to_float)
    put(pre_kw, "alpha", "pp.alpha", _to_float)
    put(pre_kw, "tau", "pp.tau", _to_float)

    gab_kw: dict = {}
    put(gab_kw, "num_scales", "gabor.scales", _to_int)
    put(gab_kw, "num_orientations", "gabor.orientations", _to_int)
    put(gab_kw, "k_max", "gabor.kmax", _to_float)
    put(gab_kw, "f", "gabor.f", _to_float)
    put(gab_kw, "sigma", "gabor.sigma", _to_float)

    fda_kw: dict = {}
    put(fda_kw, "num_components", "fda.r", _to_int)
    put(fda_kw, "ridge", "fda.ridge", _to_float)
    put(fda_kw, "pca_var", "fda.pca_var", _to_float)

    top_kw: dict = {}
    if "part.preset" in values:
        preset = values["part.preset"].lower()
        if preset not in PARTITION_PRESETS:
            raise ValueError(f"part.preset: unknown preset {preset!r} (have {sorted(PARTITION_PRESETS)})")
        top_kw["m_rows"], top_kw["n_cols"], top_kw["sub_regions"] = PARTITION_PRESETS[preset]
    put(top_kw, "m_rows", "part.m", _to_int)           # explicit keys beat the preset
    put(top_kw, "n_cols", "part.n", _to_int)
    put(top_kw, "sub_regions", "part.s", _to_int)
    put(top_kw, "preprocess_enabled", "pp.enabled", _to_bool)
    put(top_kw, "weighted", "weights.enabled", _to_bool)
    put(top_kw, "lgbp_levels", "feature.lgbp_levels", _to_int)
    if "feature.variant" in values:
        raw = values["feature.variant"].lower()
        try:
            top_kw["variant"] = GsfVariant(raw)
        except ValueError:
            raise ValueError(
                f"feature.variant: unknown variant {raw!r} (have {[v.value for v in GsfVariant]})"
            ) from None

    return PipelineConfig(
        pre=PreprocessParams(**pre_kw),
        gabor=GaborBankParams(**gab_kw),
        fda=FdaParams(**fda_kw),
        **top_kw,
    )


def load_config(path: str | os.PathLike) -> PipelineConfig:
    p = Path(path)
    if not p.is_file():
        raise ValueError(f"no such config file: {p}")
    return parse_config(p.read_text(), source=str(p))
