"""Masked spectral-similarity evaluation for peptide MS/MS prediction.

The package projects observed and predicted fragment intensities into a
fixed canonical b/y-ion vector space, scores them with masked spectral
angle and Pearson correlation, builds deterministic hash-based data
splits with leakage audits, and ships a bucketed linear baseline plus
robustness probes (NCE sweep, blind NCE shift, charge perturbation).
"""

from __future__ import annotations

from ._version import __version__
from .analysis import (
    Predictor,
    blind_nce_shift,
    charge_perturbation,
    delta_decay,
    nce_calibration_sweep,
    stratify,
)
from .baseline import BucketModel, load_model, save_model, train
from .config import RunConfig
from .errors import PepspecError
from .ions import CanonicalSpace, IonId, canonical_index, ion_from_index, ion_mz, valid_mask
from .metrics import bootstrap_ci, evaluate_pair, pcc, spectral_angle, spectral_angle_similarity
from .peptide import (
    ModifiedPeptide,
    SpectrumRecord,
    parse_modified_sequence,
    scope_filter,
    to_canonical_string,
    to_naked,
)
from .projection import (
    CanonicalVector,
    RawSpectrum,
    make_canonical_vector,
    project_ground_truth,
)
from .splits import assign_split, balanced_sample, edit_distance, leakage_audit, md5_bucket

__all__ = [
    "BucketModel",
    "CanonicalSpace",
    "CanonicalVector",
    "IonId",
    "ModifiedPeptide",
    "PepspecError",
    "Predictor",
    "RawSpectrum",
    "RunConfig",
    "SpectrumRecord",
    "__version__",
    "assign_split",
    "balanced_sample",
    "blind_nce_shift",
    "bootstrap_ci",
    "canonical_index",
    "charge_perturbation",
    "delta_decay",
    "edit_distance",
    "evaluate_pair",
    "ion_from_index",
    "ion_mz",
    "leakage_audit",
    "load_model",
    "make_canonical_vector",
    "md5_bucket",
    "nce_calibration_sweep",
    "parse_modified_sequence",
    "pcc",
    "project_ground_truth",
    "save_model",
    "scope_filter",
    "spectral_angle",
    "spectral_angle_similarity",
    "stratify",
    "to_canonical_string",
    "to_naked",
    "train",
    "valid_mask",
]
