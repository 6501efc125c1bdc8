"""Cohort normalization, composite scores and 3-D scatter export."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import EmptyCohort, InvalidWeights, NotNormalized

DEGENERATE_VALUE = 0.5
WEIGHT_SUM_TOL = 1e-9
METRICS = ("sci", "leais", "ner")


@dataclass(frozen=True)
class MetricsRecord:
    system_id: str
    sci: float
    leais: float
    ner: float
    ner_kind: str = "literal"

    def __post_init__(self):
        if self.ner_kind not in ("literal", "epsilon"):
            raise ValueError(f"unknown ner_kind {self.ner_kind!r}")
        if not all(math.isfinite(v) for v in (self.sci, self.leais, self.ner)):
            raise ValueError("metrics must be finite")
        if self.sci <= 0 or self.ner < 0:
            raise ValueError("need sci > 0 and ner >= 0")

    @property
    def values(self):
        return (self.sci, self.leais, self.ner)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class NormalizedRecord:
    """Per-metric min-max position of a system inside its cohort."""

    system_id: str
    sci: float
    leais: float
    ner: float

    @property
    def values(self):
        return (self.sci, self.leais, self.ner)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Weights:
    w1: float = 1 / 3
    w2: float = 1 / 3
    w3: float = 1 / 3

    def __post_init__(self):
        ws = (self.w1, self.w2, self.w3)
        if not all(math.isfinite(w) for w in ws) or min(ws) < 0:
            raise InvalidWeights(f"weights must be finite and non-negative, got {ws}")
        if abs(math.fsum(ws) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidWeights(f"weights must sum to 1, got {math.fsum(ws)!r}")

    @classmethod
    def from_any(cls, value):
        if isinstance(value, Weights):
            return value
        if isinstance(value, dict):
            return cls(float(value["w1"]), float(value["w2"]), float(value["w3"]))
        w = [float(v) for v in value]
        if len(w) != 3:
            raise InvalidWeights("exactly three weights are required")
        return cls(*w)

    def as_tuple(self):
        return (self.w1, self.w2, self.w3)


def minmax_columns(X, lo, hi, degenerate=DEGENERATE_VALUE):
    """Map each column of ``X`` from [lo, hi] onto [0, 1]; flat columns -> ``degenerate``."""
    X = np.asarray(X, dtype=np.float64)
    span = hi - lo
    flat = span == 0
    out = (X - lo) / np.where(flat, 1.0, span)
    out[:, flat] = degenerate
    return out


def normalize_cohort(records):
    """Min-max normalize each metric over the cohort."""
    records = list(records)
    if not records:
        raise EmptyCohort("cannot normalize an empty cohort")
    X = np.array([r.values for r in records], dtype=np.float64)
    Z = minmax_columns(X, X.min(axis=0), X.max(axis=0))
    return [NormalizedRecord(r.system_id, *map(float, z)) for r, z in zip(records, Z)]


def security_score_literal(record, weights):
    """w1*SCI + w2*LEAIS + w3*NER on the raw, unnormalized metrics."""
    w = Weights.from_any(weights)
    return w.w1 * record.sci + w.w2 * record.leais + w.w3 * record.ner


def _check_normalized(record):
    if not all(0.0 <= v <= 1.0 for v in record.values):
        raise NotNormalized(f"{record.system_id}: metrics outside [0, 1]")


def risk_score_oriented(record, weights):
    """Normalized risk in [0, 1]; lower is more secure.

    High complexity and high sensitivity add risk, high NER removes it, so
    the NER term enters as ``1 - ner``.
    """
    w = Weights.from_any(weights)
    _check_normalized(record)
    return w.w1 * record.sci + w.w2 * record.leais + w.w3 * (1.0 - record.ner)


@dataclass(frozen=True)
class ScatterRow:
    system_id: str
    x: float
    y: float
    z: float
    distance: float

    def to_dict(self):
        return asdict(self)


def scatter_export(records):
    """One (x, y, z) point per system, nearest the origin (most secure) first.

    Ties in distance are broken by ``system_id``.
    """
    rows = []
    for r in records:
        _check_normalized(r)
        x, y, z = r.sci, r.leais, 1.0 - r.ner
        rows.append(ScatterRow(r.system_id, x, y, z, math.sqrt(x * x + y * y + z * z)))
    return sorted(rows, key=lambda row: (row.distance, row.system_id))


def scatter_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["system_id", "x", "y", "z", "distance"])
    for row in rows:
        writer.writerow([row.system_id] + [repr(float(v)) for v in
                                           (row.x, row.y, row.z, row.distance)])
    return buf.getvalue()


def scatter_to_json(rows):
    return json.dumps([row.to_dict() for row in rows], sort_keys=True, indent=2) + "\n"
