"""Feature schema, dataset containers and small shared statistics.

The schema is the fixed 75-feature layout every extraction module writes
into and every learner reads from. Missing values are carried as an explicit
validity mask next to the values, never as sentinels.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CATEGORIES = (
    "chronemics",
    "comm_content",
    "eye_blink",
    "in_game_behaviour",
    "facial_expression",
    "performance",
    "self_report",
)

_SCHEMA_TABLE = {
    "chronemics": (
        "TimeSpeaking", "CountSpeechSegments", "CountConversationalTurns",
        "AvgSpeechSegmentLength", "AvgPauseSegmentLength", "SDSpeechSegmentLength",
        "IsDominantSpeakTime", "IsDominantConvTurns", "TimeSilence",
        "FractionTimeSilence", "AverageSilenceLength", "FirstSilenceLength",
    ),
    "comm_content": (
        "CountTotalWords", "CountWordsAnalytic", "CountWordsClout",
        "CountWordsAuthentic", "CountWordsTone", "CountWordsPronounI",
        "CountWordsPronounWe", "CountWordsPronounYou", "CountWordsNumber",
        "CountWordsAffect", "CountWordsPosEmo", "CountWordsNegEmo",
        "CountWordsSocial", "CountWordsAffilitation", "CountWordsMotion",
        "CountWordsSpace", "CountWordsTime",
    ),
    "eye_blink": ("MeanBlinkRate", "StdBlinkRate"),
    "in_game_behaviour": ("CountVerticalPushes", "CountHorizontalPushes"),
    "facial_expression": (
        "EngagementMean", "EngagementPeaks", "ContemptMean", "ContemptPeaks",
        "SurpriseMean", "SurprisePeaks", "AngerMean", "AngerPeaks",
        "SadnessMean", "SadnessPeaks", "DisgustMean", "DisgustPeaks",
        "FearMean", "FearPeaks", "JoyMean", "JoyPeaks",
    ),
    "performance": (
        "ScoreRound1", "ScoreRound2", "ScoreCollector", "ScorePusher",
        "ScoreDiffRounds", "ScoreAbsDiffRounds", "ScoreDiffRole",
        "ScoreAbsDiffRole", "ScoreOverall", "ScoreMean", "ScoreMin", "ScoreMax",
    ),
    "self_report": (
        "Age", "GamerIdentification", "GenrePuzzles", "GenreCasual",
        "SameGenderCoPlayer", "Gender", "GenderCoPlayer", "Extraversion",
        "Agreeableness", "Conscientiousness", "EmotionalStability", "Openness",
        "PropensityToTrust", "BrainhexSocializer",
    ),
}

NA_TOKEN = "NA"
ID_COLUMNS = ("participant_id", "dyad_id", "affiliation")


class SchemaError(ValueError):
    """Raised when data does not conform to the feature schema."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered (name, category) pairs."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        for name, cat in self.entries:
            if cat not in CATEGORIES:
                raise SchemaError(f"unknown category {cat!r} for feature {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def category_of(self, name: str) -> str:
        return self.entries[self.index(name)][1]

    def category_sizes(self) -> dict[str, int]:
        sizes = {c: 0 for c in CATEGORIES}
        for _, cat in self.entries:
            sizes[cat] += 1
        return sizes

    def digest(self) -> str:
        """Stable hash of the ordered names, used to guard serialized models."""
        joined = "\n".join(f"{n}:{c}" for n, c in self.entries)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


def default_schema() -> FeatureSchema:
    return FeatureSchema(
        tuple((name, cat) for cat in CATEGORIES for name in _SCHEMA_TABLE[cat])
    )


SCHEMA = default_schema()


@dataclass(frozen=True)
class FeatureVector:
    """Values aligned to schema order plus a validity mask.

    Invalid cells carry NaN in ``values``; their content is never read.
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        valid = np.asarray(self.valid, dtype=bool).copy()
        if values.shape != valid.shape or values.ndim != 1:
            raise SchemaError("values and validity mask must be equal-length 1-D arrays")
        if not np.all(np.isfinite(values[valid])):
            raise SchemaError("every valid feature value must be finite")
        values[~valid] = np.nan
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_mapping(cls, mapping: dict[str, float | None], schema: FeatureSchema = SCHEMA):
        """Build from ``{name: value}``; names absent or mapped to None/NaN are invalid."""
        unknown = set(mapping) - set(schema.names)
        if unknown:
            raise SchemaError(f"unknown features: {sorted(unknown)}")
        values = np.full(len(schema), np.nan)
        for i, name in enumerate(schema.names):
            v = mapping.get(name)
            if v is not None:
                values[i] = float(v)
        return cls(values, np.isfinite(values))

    def as_dict(self, schema: FeatureSchema = SCHEMA) -> dict[str, float | None]:
        return {
            n: (float(v) if ok else None)
            for n, v, ok in zip(schema.names, self.values, self.valid)
        }


@dataclass(frozen=True)
class Sample:
    participant_id: str
    dyad_id: str
    features: FeatureVector
    affiliation: float
    binary_label: str | None = None  # "low" | "high"

    def __post_init__(self):
        if not math.isfinite(self.affiliation):
            raise SchemaError(f"affiliation of {self.participant_id} is not finite")
        if self.binary_label not in (None, "low", "high"):
            raise SchemaError(f"binary label must be 'low' or 'high', got {self.binary_label!r}")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    schema: FeatureSchema = field(default=SCHEMA)

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        ids = [s.participant_id for s in samples]
        if len(set(ids)) != len(ids):
            raise SchemaError("participant ids must be unique")
        counts: dict[str, int] = {}
        for s in samples:
            if len(s.features) != len(self.schema):
                raise SchemaError(f"feature vector of {s.participant_id} does not match schema")
            counts[s.dyad_id] = counts.get(s.dyad_id, 0) + 1
        bad = sorted(d for d, c in counts.items() if c != 2)
        if bad:
            raise SchemaError(f"dyads without exactly two partners: {bad}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def X(self) -> np.ndarray:
        """Feature matrix with NaN in invalid cells."""
        if not self.samples:
            return np.empty((0, len(self.schema)))
        return np.vstack([s.features.values for s in self.samples])

    @property
    def valid(self) -> np.ndarray:
        if not self.samples:
            return np.empty((0, len(self.schema)), dtype=bool)
        return np.vstack([s.features.valid for s in self.samples])

    @property
    def affiliation(self) -> np.ndarray:
        return np.array([s.affiliation for s in self.samples], dtype=float)

    @property
    def labels(self) -> np.ndarray:
        """Binary labels as 0 (low) / 1 (high)."""
        if any(s.binary_label is None for s in self.samples):
            raise SchemaError("dataset has no binary labels; run median_split first")
        return np.array([s.binary_label == "high" for s in self.samples], dtype=int)

    @property
    def dyad_ids(self) -> list[str]:
        return [s.dyad_id for s in self.samples]

    @property
    def participant_ids(self) -> list[str]:
        return [s.participant_id for s in self.samples]

    def dyads(self) -> list[str]:
        """Dyad ids in order of first appearance."""
        return list(dict.fromkeys(self.dyad_ids))

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices), self.schema)

    def with_matrix(self, X: np.ndarray, valid: np.ndarray | None = None) -> "Dataset":
        """Copy with feature values replaced by the rows of ``X``."""
        if valid is None:
            valid = np.isfinite(X)
        samples = tuple(
            replace(s, features=FeatureVector(x, v)) for s, x, v in zip(self.samples, X, valid)
        )
        return Dataset(samples, self.schema)


def score_affiliation(item_responses: Sequence[float]) -> float:
    """Mean of the 11 affiliation items, each on a 1-7 scale."""
    items = list(item_responses)
    if len(items) != 11:
        raise ValueError(f"expected 11 affiliation items, got {len(items)}")
    for i, x in enumerate(items):
        if x is None or not math.isfinite(float(x)):
            raise ValueError(f"affiliation item {i} is missing")
        if not 1 <= float(x) <= 7:
            raise ValueError(f"affiliation item {i} out of range [1, 7]: {x}")
    return float(np.mean(np.asarray(items, dtype=float)))


def cronbach_alpha(item_matrix) -> float:
    """Cronbach's alpha for an N x k item matrix (sample variances, ddof=1)."""
    m = np.asarray(item_matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("need a 2-D item matrix with at least two rows")
    k = m.shape[1]
    if k < 2:
        raise ValueError("need at least two items")
    total_var = m.sum(axis=1).var(ddof=1)
    if total_var == 0:
        raise ValueError("alpha is undefined: total score has zero variance")
    item_var = m.var(axis=0, ddof=1).sum()
    return float(k / (k - 1) * (1.0 - item_var / total_var))


def median_split(dataset: Dataset) -> Dataset:
    """Label each sample high iff its affiliation exceeds the sample median.

    Ties with the median go to ``low``.
    """
    if len(dataset) == 0:
        raise ValueError("cannot median-split an empty dataset")
    med = float(np.median(dataset.affiliation))
    samples = tuple(
        replace(s, binary_label="high" if s.affiliation > med else "low")
        for s in dataset.samples
    )
    return Dataset(samples, dataset.schema)


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b with tie correction.

    Uses the O(n^2) pair count; the inputs in this package are at most a few
    hundred long.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    iu = np.triu_indices(n, k=1)
    dx = np.sign(x[:, None] - x[None, :])[iu]
    dy = np.sign(y[:, None] - y[None, :])[iu]
    n0 = n * (n - 1) / 2
    n1 = np.count_nonzero(dx == 0)
    n2 = np.count_nonzero(dy == 0)
    if n1 == n0 or n2 == n0:
        raise ValueError("tau-b is undefined when one variable is constant")
    s = float(np.sum(dx * dy))
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    return max(-1.0, min(1.0, tau))


def _format_value(v: float) -> str:
    return repr(float(v)) if float(v) != int(v) or abs(v) >= 1e15 else str(int(v))


def write_feature_table(dataset: Dataset, path: str | Path) -> None:
    """Write the participant-level feature table as CSV (NA for invalid cells).

    Floats are written with ``repr`` so a read-back is bit-exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ID_COLUMNS) + list(dataset.schema.names))
        for s in dataset.samples:
            cells = [
                _format_value(v) if ok else NA_TOKEN
                for v, ok in zip(s.features.values, s.features.valid)
            ]
            w.writerow([s.participant_id, s.dyad_id, repr(float(s.affiliation))] + cells)


def read_feature_table(path: str | Path, schema: FeatureSchema = SCHEMA) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty feature table")
    header = rows[0]
    missing = [c for c in list(ID_COLUMNS) + list(schema.names) if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    col = {name: i for i, name in enumerate(header)}
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        values = np.full(len(schema), np.nan)
        for j, name in enumerate(schema.names):
            cell = row[col[name]].strip()
            if cell != NA_TOKEN and cell != "":
                try:
                    values[j] = float(cell)
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}: bad value {cell!r} for {name}") from None
        samples.append(
            Sample(
                participant_id=row[col["participant_id"]],
                dyad_id=row[col["dyad_id"]],
                features=FeatureVector(values, np.isfinite(values)),
                affiliation=float(row[col["affiliation"]]),
            )
        )
    return Dataset(tuple(samples), schema)
