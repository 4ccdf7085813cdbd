"""Face representation and matching with Gabor surface features.

The pipeline turns a grayscale face image into a sequence of regional
descriptors and compares faces with discriminant subspaces learned per
region:

    image -> (optional photometric normalization) -> Gabor magnitude
    pictures -> joint binary-pattern code maps -> regional histograms
    -> per-region Fisher projections -> weighted cosine sum.

Modules are layered bottom-up: :mod:`gsf.imgio` (files, manifests),
:mod:`gsf.preprocess`, :mod:`gsf.gabor`, :mod:`gsf.codes`,
:mod:`gsf.hist`, :mod:`gsf.subspace`, and :mod:`gsf.pipeline` on top.
"""

from gsf.codes import GsfVariant
from gsf.config import PipelineConfig, default_config, load_config, parse_config
from gsf.gabor import GaborBankParams, compute_gmps, make_bank, make_kernel
from gsf.hist import PartitionConfig, region_histograms
from gsf.imgio import (
    DatasetManifest,
    load_image,
    load_manifest,
    save_image,
    scan_subject_dirs,
    write_manifest,
)
from gsf.pipeline import EvalReport, evaluate, extract_features, train
from gsf.preprocess import PreprocessParams, preprocess
from gsf.subspace import (
    EpfdaModel,
    cosine,
    learn_weights,
    load_model,
    project,
    save_model,
    score,
    train_fda_region,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetManifest",
    "EpfdaModel",
    "EvalReport",
    "GaborBankParams",
    "GsfVariant",
    "PartitionConfig",
    "PipelineConfig",
    "PreprocessParams",
    "compute_gmps",
    "cosine",
    "default_config",
    "evaluate",
    "extract_features",
    "learn_weights",
    "load_config",
    "load_image",
    "load_manifest",
    "scan_subject_dirs",
    "write_manifest",
    "load_model",
    "make_bank",
    "make_kernel",
    "parse_config",
    "preprocess",
    "project",
    "region_histograms",
    "save_image",
    "save_model",
    "score",
    "train",
    "train_fda_region",
]
