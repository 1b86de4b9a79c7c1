"""A trainable bucketed linear baseline predictor.

Training rows are grouped into discrete (length, charge, collision
energy) buckets. Within a bucket, each masked ion position gets an
ordinary least-squares fit of intensity on an intercept plus a one-hot
encoding of the two residues flanking the cleavage site, with a small
ridge penalty on the non-intercept coefficients for rank-deficient
buckets. Buckets with too few rows fall back to their mean intensity
template. At prediction time the query collision energy snaps to the
nearest learned value (ties to the lower), and missing (length, charge)
combinations snap to the nearest trained one.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    MAX_PEPTIDE_LENGTH,
    MAX_PRECURSOR_CHARGE,
    MIN_PEPTIDE_LENGTH,
    MIN_PRECURSOR_CHARGE,
    N_SERIES,
)
from .errors import EmptyModelError, EmptyTrainingError, SchemaError, ScopeViolationError
from .ions import DEFAULT_SPACE, CanonicalSpace, mask_for_length, valid_mask
from .peptide import ModifiedPeptide, SpectrumRecord, to_canonical_string
from .projection import CanonicalVector, make_canonical_vector

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

#: Residues in feature order (sorted one-letter codes).
RESIDUE_ORDER = "ACDEFGHIKLMNPQRSTVWY"
_RES_INDEX = {residue: i for i, residue in enumerate(RESIDUE_ORDER)}

#: Intercept + one-hot left flank (20) + one-hot right flank (20).
N_FEATURES = 1 + 2 * len(RESIDUE_ORDER)


@dataclass(frozen=True)
class BucketKey:
    """Discrete training bucket: peptide length, charge, exact CE."""

    length: int
    charge: int
    collision_energy: float

    def as_string(self) -> str:
        return f"{self.length}|{self.charge}|{self.collision_energy!r}"

    @classmethod
    def from_string(cls, text: str) -> "BucketKey":
        parts = text.split("|")
        if len(parts) != 3:
            raise SchemaError(f"malformed bucket key {text!r}")
        return cls(int(parts[0]), int(parts[1]), float(parts[2]))


@dataclass
class BucketEntry:
    """Learned content of one bucket.

    ``template`` holds mean intensities over the bucket's masked
    positions (ascending canonical index); ``coef`` holds one
    N_FEATURES-long coefficient row per masked position.
    """

    kind: str
    n_rows: int
    template: np.ndarray | None = None
    coef: np.ndarray | None = None


@dataclass
class BucketModel:
    """An immutable trained model; safe to share across threads."""

    space: CanonicalSpace
    ridge_lambda: float
    min_bucket_count: int
    buckets: dict[BucketKey, BucketEntry] = field(default_factory=dict)

    def ce_grid(self) -> list[float]:
        """Sorted unique learned collision energies."""
        return sorted({key.collision_energy for key in self.buckets})

    def predict(self, peptide: ModifiedPeptide, charge: int, nce: float) -> CanonicalVector:
        """Predictor-protocol adapter around the module-level predict."""
        return predict(peptide, charge, nce, self)


def feature_vector(peptide: ModifiedPeptide, position: int) -> np.ndarray:
    """Features for one cleavage site: intercept + flanking residue one-hots."""
    x = np.zeros(N_FEATURES)
    x[0] = 1.0
    x[1 + _RES_INDEX[peptide.residues[position - 1]]] = 1.0
    x[1 + len(RESIDUE_ORDER) + _RES_INDEX[peptide.residues[position]]] = 1.0
    return x


def train(
    rows,
    *,
    ridge_lambda: float = 1e-6,
    min_bucket_count: int = 5,
    space: CanonicalSpace = DEFAULT_SPACE,
) -> BucketModel:
    """Fit the bucketed linear model.

    Args:
        rows: Iterable of (SpectrumRecord, CanonicalVector truth) pairs;
            records must be scope-valid and truths normalized.
        ridge_lambda: Damping applied to non-intercept coefficients only,
            so constant targets are recovered exactly.
        min_bucket_count: Buckets with fewer rows store a mean template.

    Returns:
        The trained model. Training is deterministic: any ordering of the
        same row multiset yields the same model, because bucket rows are
        sorted by (canonical sequence, truth bytes) before fitting.

    Raises:
        EmptyTrainingError: No rows.
    """
    groups: dict[BucketKey, list[tuple[str, ModifiedPeptide, np.ndarray]]] = {}
    for record, truth in rows:
        key = BucketKey(
            length=record.peptide.length,
            charge=record.precursor_charge,
            collision_energy=float(record.collision_energy),
        )
        groups.setdefault(key, []).append(
            (to_canonical_string(record.peptide), record.peptide, np.asarray(truth.values, dtype=float))
        )
    if not groups:
        raise EmptyTrainingError("baseline training received no rows")
    per_position = N_SERIES * space.z_frag_max
    damping = np.eye(N_FEATURES) * ridge_lambda
    damping[0, 0] = 0.0
    buckets: dict[BucketKey, BucketEntry] = {}
    for key, bucket_rows in groups.items():
        bucket_rows.sort(key=lambda row: (row[0], row[2].tobytes()))
        masked_idx = np.flatnonzero(mask_for_length(key.length, key.charge, space))
        targets = np.stack([row[2] for row in bucket_rows])[:, masked_idx]
        n = len(bucket_rows)
        if n < min_bucket_count:
            buckets[key] = BucketEntry(kind="template", n_rows=n, template=targets.mean(axis=0))
            continue
        positions = masked_idx // per_position + 1
        coef = np.zeros((masked_idx.size, N_FEATURES))
        for position in np.unique(positions):
            design = np.zeros((n, N_FEATURES))
            design[:, 0] = 1.0
            for i, (_, pep, _) in enumerate(bucket_rows):
                design[i, 1 + _RES_INDEX[pep.residues[position - 1]]] = 1.0
                design[i, 1 + len(RESIDUE_ORDER) + _RES_INDEX[pep.residues[position]]] = 1.0
            columns = np.flatnonzero(positions == position)
            normal = design.T @ design + damping
            beta = np.linalg.solve(normal, design.T @ targets[:, columns])
            coef[columns] = beta.T
        buckets[key] = BucketEntry(kind="linear", n_rows=n, coef=coef)
    return BucketModel(
        space=space,
        ridge_lambda=ridge_lambda,
        min_bucket_count=min_bucket_count,
        buckets=buckets,
    )


def ce_snap(query_ce: float, model: BucketModel) -> float:
    """Nearest learned collision energy; ties go to the lower value.

    Raises:
        EmptyModelError: The model has no buckets.
    """
    grid = model.ce_grid()
    if not grid:
        raise EmptyModelError("model has no learned collision energies")
    return min(grid, key=lambda ce: (abs(ce - query_ce), ce))


def predict(
    peptide: ModifiedPeptide, charge: int, ce: float, model: BucketModel
) -> CanonicalVector:
    """Predict a canonical intensity vector for a peptide/charge/CE query.

    The collision energy snaps first; among buckets at the snapped CE the
    (length, charge) pair snaps by lexicographic (|dL|, |dz|, L, z)
    distance. The bucket output is evaluated, clamped, masked for the
    actual query (length, charge), and base-peak normalized; positions
    the trained bucket never covered stay zero.

    Raises:
        EmptyModelError: The model has no buckets.
        ScopeViolationError: Query outside the supported envelope.
    """
    if not model.buckets:
        raise EmptyModelError("model has no buckets")
    length = peptide.length
    if not MIN_PEPTIDE_LENGTH <= length <= MAX_PEPTIDE_LENGTH or not (
        MIN_PRECURSOR_CHARGE <= charge <= MAX_PRECURSOR_CHARGE
    ):
        raise ScopeViolationError(
            f"query (L={length}, z={charge}) is outside the supported scope"
        )
    snapped_ce = ce_snap(ce, model)
    exact = BucketKey(length=length, charge=charge, collision_energy=snapped_ce)
    if exact in model.buckets:
        key = exact
    else:
        candidates = [k for k in model.buckets if k.collision_energy == snapped_ce]
        key = min(
            candidates,
            key=lambda k: (abs(k.length - length), abs(k.charge - charge), k.length, k.charge),
        )
    entry = model.buckets[key]
    masked_idx = np.flatnonzero(mask_for_length(key.length, key.charge, model.space))
    values = np.zeros(model.space.dim)
    if entry.kind == "template":
        values[masked_idx] = entry.template
    else:
        per_position = N_SERIES * model.space.z_frag_max
        positions = masked_idx // per_position + 1
        for position in np.unique(positions):
            if position > length - 1:
                continue
            x = feature_vector(peptide, int(position))
            columns = np.flatnonzero(positions == position)
            values[masked_idx[columns]] = entry.coef[columns] @ x
    return make_canonical_vector(values, valid_mask(peptide, charge, model.space))


def save_model(model: BucketModel, path: str) -> None:
    """Serialize a model to a versioned JSON artifact."""
    buckets = {}
    for key, entry in model.buckets.items():
        payload: dict = {"kind": entry.kind, "n_rows": entry.n_rows}
        if entry.kind == "template":
            payload["template"] = entry.template.tolist()
        else:
            payload["coef"] = entry.coef.tolist()
        buckets[key.as_string()] = payload
    document = {
        "format_version": MODEL_FORMAT_VERSION,
        "l_ref": model.space.l_ref,
        "z_frag_max": model.space.z_frag_max,
        "ridge_lambda": model.ridge_lambda,
        "min_bucket_count": model.min_bucket_count,
        "buckets": buckets,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(document, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_model(path: str) -> BucketModel:
    """Load a model artifact written by save_model.

    Raises:
        SchemaError: Unreadable file, wrong format version, or malformed
            bucket payloads.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read model {path}: {exc}") from exc
    if not isinstance(document, dict) or document.get("format_version") != MODEL_FORMAT_VERSION:
        raise SchemaError(
            f"model {path} is not a format_version={MODEL_FORMAT_VERSION} artifact"
        )
    space = CanonicalSpace(l_ref=int(document["l_ref"]), z_frag_max=int(document["z_frag_max"]))
    buckets: dict[BucketKey, BucketEntry] = {}
    for key_text, payload in document["buckets"].items():
        key = BucketKey.from_string(key_text)
        kind = payload.get("kind")
        if kind == "template":
            entry = BucketEntry(
                kind=kind,
                n_rows=int(payload["n_rows"]),
                template=np.asarray(payload["template"], dtype=float),
            )
        elif kind == "linear":
            coef = np.asarray(payload["coef"], dtype=float)
            if coef.ndim != 2 or coef.shape[1] != N_FEATURES:
                raise SchemaError(f"bucket {key_text} has malformed coefficients")
            entry = BucketEntry(kind=kind, n_rows=int(payload["n_rows"]), coef=coef)
        else:
            raise SchemaError(f"bucket {key_text} has unknown kind {kind!r}")
        buckets[key] = entry
    return BucketModel(
        space=space,
        ridge_lambda=float(document["ridge_lambda"]),
        min_bucket_count=int(document["min_bucket_count"]),
        buckets=buckets,
    )
