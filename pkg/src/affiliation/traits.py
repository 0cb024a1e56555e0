"""Self-report trait features (TIPI, trust, gaming preferences, demographics)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TIPI_TRAITS = ("Extraversion", "Agreeableness", "Conscientiousness", "EmotionalStability", "Openness")
# (direct item, reverse-scored item), 1-based, standard TIPI key
TIPI_KEY = {
    "Extraversion": (1, 6),
    "Agreeableness": (7, 2),
    "Conscientiousness": (3, 8),
    "EmotionalStability": (9, 4),
    "Openness": (5, 10),
}
DEFAULT_GENDER_CODES = {"female": 0.0, "male": 1.0}


@dataclass(frozen=True)
class QuestionnaireResponse:
    tipi_items: tuple[int, ...]
    gts_items: tuple[int, ...]
    gamer_identification: float
    genre_puzzles: bool
    genre_casual: bool
    brainhex_socializer: bool
    age: float
    gender: str
    partner_gender: str | None = None

    def __post_init__(self):
        if len(self.tipi_items) != 10 or any(not 1 <= x <= 7 for x in self.tipi_items):
            raise ValueError("TIPI needs 10 items in [1, 7]")
        if len(self.gts_items) != 6 or any(not 1 <= x <= 5 for x in self.gts_items):
            raise ValueError("General Trust Scale needs 6 items in [1, 5]")
        if not 0 <= self.gamer_identification <= 100:
            raise ValueError("gamer identification must lie in [0, 100]")


def tipi_scores(tipi_items) -> dict[str, float]:
    items = list(tipi_items)
    if len(items) != 10:
        raise ValueError(f"expected 10 TIPI items, got {len(items)}")
    for i, x in enumerate(items):
        if not 1 <= x <= 7:
            raise ValueError(f"TIPI item {i + 1} out of range [1, 7]: {x}")
    return {
        trait: (items[d - 1] + (8 - items[r - 1])) / 2.0
        for trait, (d, r) in TIPI_KEY.items()
    }


def trait_features(
    resp: QuestionnaireResponse, gender_codes: dict[str, float] = DEFAULT_GENDER_CODES
) -> tuple[dict[str, float], dict[str, bool]]:
    """The 14 self-report features.

    ``gender_codes`` is the dataset's declared category encoding; unknown
    categories raise rather than silently getting a code.
    """

    def code(g: str) -> float:
        try:
            return float(gender_codes[g.lower()])
        except KeyError:
            raise ValueError(f"gender {g!r} has no declared code") from None

    feats = {
        "Age": float(resp.age),
        "GamerIdentification": float(resp.gamer_identification),
        "GenrePuzzles": float(bool(resp.genre_puzzles)),
        "GenreCasual": float(bool(resp.genre_casual)),
        "Gender": code(resp.gender),
        "PropensityToTrust": float(np.mean(resp.gts_items)),
        "BrainhexSocializer": float(bool(resp.brainhex_socializer)),
    }
    feats.update(tipi_scores(resp.tipi_items))
    valid = dict.fromkeys(feats, True)
    if resp.partner_gender:
        feats["GenderCoPlayer"] = code(resp.partner_gender)
        feats["SameGenderCoPlayer"] = float(resp.gender.lower() == resp.partner_gender.lower())
        valid["GenderCoPlayer"] = valid["SameGenderCoPlayer"] = True
    else:
        feats["GenderCoPlayer"] = feats["SameGenderCoPlayer"] = 0.0
        valid["GenderCoPlayer"] = valid["SameGenderCoPlayer"] = False
    return feats, valid


QUESTIONNAIRE_COLUMNS = (
    ["participant_id"]
    + [f"tipi_{i}" for i in range(1, 11)]
    + [f"gts_{i}" for i in range(1, 7)]
    + ["gamer_identification", "genre_puzzles", "genre_casual", "brainhex_socializer", "age", "gender"]
    + [f"aff_{i}" for i in range(1, 12)]
)


def _as_bool(cell: str) -> bool:
    c = cell.strip().lower()
    if c in ("1", "true", "yes"):
        return True
    if c in ("0", "false", "no", ""):
        return False
    raise ValueError(f"cannot parse boolean {cell!r}")


def read_questionnaires(path: str | Path) -> dict[str, tuple[QuestionnaireResponse, list[float]]]:
    """Read questionnaire rows keyed by participant id.

    Returns the trait response (without partner gender, which comes from the
    session pairing) and the 11 affiliation items.
    """
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in QUESTIONNAIRE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                resp = QuestionnaireResponse(
                    tipi_items=tuple(int(row[f"tipi_{i}"]) for i in range(1, 11)),
                    gts_items=tuple(int(row[f"gts_{i}"]) for i in range(1, 7)),
                    gamer_identification=float(row["gamer_identification"]),
                    genre_puzzles=_as_bool(row["genre_puzzles"]),
                    genre_casual=_as_bool(row["genre_casual"]),
                    brainhex_socializer=_as_bool(row["brainhex_socializer"]),
                    age=float(row["age"]),
                    gender=row["gender"].strip(),
                )
                items = [float(row[f"aff_{i}"]) for i in range(1, 12)]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            out[row["participant_id"]] = (resp, items)
    return out


def write_questionnaires(rows: list[tuple[str, QuestionnaireResponse, list[float]]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(QUESTIONNAIRE_COLUMNS)
        for pid, r, items in rows:
            w.writerow(
                [pid, *r.tipi_items, *r.gts_items, r.gamer_identification,
                 int(r.genre_puzzles), int(r.genre_casual), int(r.brainhex_socializer),
                 r.age, r.gender, *[f"{x:g}" for x in items]]
            )
