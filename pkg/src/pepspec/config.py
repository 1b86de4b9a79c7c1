"""Run configuration and stratification binning rules.

A RunConfig collects every knob a run depends on: canonical space
dimensions, metric convention, seeds, split rule, bootstrap parameters,
and binning edges. Configs load from a JSON file of top-level keys;
command-line flags override individual fields.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, fields

from .constants import DEFAULT_COLLISION_ENERGY, MAX_FRAGMENT_CHARGE, REFERENCE_LENGTH
from .errors import SchemaError
from .ions import CanonicalSpace

logger = logging.getLogger(__name__)

#: Length-bin edges: [6,10),[10,15),[15,20),[20,25),[25,40], last bin closed.
DEFAULT_LENGTH_EDGES = (6, 10, 15, 20, 25, 40)

#: NCE bins have this width on the nce/100 scale (25 -> "0.25-0.30").
DEFAULT_NCE_BIN_WIDTH = 0.05

SA_CONVENTIONS = ("1/pi", "2/pi")
SPLIT_RULES = ("backbone", "modified_sequence", "row_random")


def length_bin_label(length: int, edges: tuple[int, ...] = DEFAULT_LENGTH_EDGES) -> str:
    """Label the length bin containing a peptide length.

    Bins are half-open except the last, which is closed. Out-of-range
    lengths clamp into the first or last bin so stratification stays
    total over scope-filtered data.
    """
    last = len(edges) - 2
    for i in range(last + 1):
        lo, hi = edges[i], edges[i + 1]
        if length < hi or i == last:
            return f"[{lo},{hi}]" if i == last else f"[{lo},{hi})"
    raise SchemaError(f"length bin edges {edges!r} define no bins")


def nce_bin_label(nce: float, width: float = DEFAULT_NCE_BIN_WIDTH) -> str:
    """Label the NCE bin for a collision energy, on the nce/100 scale."""
    scaled = nce / 100.0
    index = math.floor(scaled / width + 1e-9)
    lo = index * width
    return f"{lo:.2f}-{lo + width:.2f}"


@dataclass
class RunConfig:
    """All run-level settings with benchmark-default values."""

    l_ref: int = REFERENCE_LENGTH
    z_frag_max: int = MAX_FRAGMENT_CHARGE
    sa_convention: str = "1/pi"
    seed: int = 42
    split_rule: str = "backbone"
    bootstrap_resamples: int = 1000
    bootstrap_level: float = 0.95
    length_edges: tuple[int, ...] = DEFAULT_LENGTH_EDGES
    nce_bin_width: float = DEFAULT_NCE_BIN_WIDTH
    default_nce: float = DEFAULT_COLLISION_ENERGY
    ridge_lambda: float = 1e-6
    min_bucket_count: int = 5

    def __post_init__(self) -> None:
        self.length_edges = tuple(int(e) for e in self.length_edges)
        self.validate()

    def validate(self) -> None:
        """Raise SchemaError on any out-of-range field."""
        if self.l_ref < 2 or self.z_frag_max < 1:
            raise SchemaError("l_ref must be >= 2 and z_frag_max >= 1")
        if self.sa_convention not in SA_CONVENTIONS:
            raise SchemaError(f"sa_convention must be one of {SA_CONVENTIONS}")
        if self.split_rule not in SPLIT_RULES:
            raise SchemaError(f"split_rule must be one of {SPLIT_RULES}")
        if self.bootstrap_resamples < 1:
            raise SchemaError("bootstrap_resamples must be >= 1")
        if not 0.0 < self.bootstrap_level < 1.0:
            raise SchemaError("bootstrap_level must be in (0, 1)")
        if len(self.length_edges) < 2 or list(self.length_edges) != sorted(
            set(self.length_edges)
        ):
            raise SchemaError("length_edges must be >= 2 strictly increasing integers")
        if self.nce_bin_width <= 0:
            raise SchemaError("nce_bin_width must be positive")
        if self.ridge_lambda < 0:
            raise SchemaError("ridge_lambda must be >= 0")
        if self.min_bucket_count < 1:
            raise SchemaError("min_bucket_count must be >= 1")

    def space(self) -> CanonicalSpace:
        return CanonicalSpace(l_ref=self.l_ref, z_frag_max=self.z_frag_max)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["length_edges"] = list(self.length_edges)
        return out

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        """Load a config from a JSON file of top-level keys.

        Raises:
            SchemaError: Unknown keys, wrong types, or invalid values.
        """
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise SchemaError(f"config {path} must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise SchemaError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid config {path}: {exc}") from exc
