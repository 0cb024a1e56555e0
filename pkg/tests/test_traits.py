from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from affiliation.traits import (
    TIPI_KEY, QuestionnaireResponse, read_questionnaires, tipi_scores, trait_features,
    write_questionnaires,
)


def response(**kw):
    base = dict(tipi_items=(4,) * 10, gts_items=(3,) * 6, gamer_identification=50.0, genre_puzzles=True,
                genre_casual=False, brainhex_socializer=True, age=30, gender="female", partner_gender="male")
    base.update(kw)
    return QuestionnaireResponse(**base)


def test_tipi_examples():
    assert set(tipi_scores([4] * 10).values()) == {4.0}
    assert set(tipi_scores([7] * 10).values()) == {4.0}
    items = [4] * 10
    items[0], items[5] = 7, 1  # extraversion: item 1 direct, item 6 reversed
    assert tipi_scores(items)["Extraversion"] == 7.0


def test_tipi_range():
    with pytest.raises(ValueError, match="item 3"):
        tipi_scores([4, 4, 8] + [4] * 7)


@given(st.lists(st.integers(1, 7), min_size=10, max_size=10), st.sampled_from(sorted(TIPI_KEY)))
def test_tipi_reversal_swap_invariance(items, trait):
    d, r = TIPI_KEY[trait]
    swapped = list(items)
    swapped[d - 1], swapped[r - 1] = 8 - items[r - 1], 8 - items[d - 1]
    assert tipi_scores(swapped)[trait] == tipi_scores(items)[trait]


def test_trait_feature_examples():
    f, ok = trait_features(response(gts_items=(5,) * 6, gamer_identification=73))
    assert f["PropensityToTrust"] == 5.0
    assert f["GamerIdentification"] == 73.0
    assert f["SameGenderCoPlayer"] == 0.0
    assert f["Gender"] == 0.0 and f["GenderCoPlayer"] == 1.0
    assert len(f) == 14 and all(ok.values())


def test_missing_partner_invalidates_pair_features():
    f, ok = trait_features(response(partner_gender=None))
    assert not ok["SameGenderCoPlayer"] and not ok["GenderCoPlayer"]
    assert ok["Gender"]


def test_declared_gender_codes():
    codes = {"female": 2.0, "male": 5.0, "nonbinary": 7.0}
    f, _ = trait_features(response(gender="Nonbinary", partner_gender="nonbinary"), codes)
    assert f["Gender"] == 7.0 and f["SameGenderCoPlayer"] == 1.0
    with pytest.raises(ValueError, match="no declared code"):
        trait_features(response(gender="other"))


@given(st.lists(st.integers(1, 5), min_size=6, max_size=6), st.booleans(), st.booleans())
def test_encodings(gts, puzzles, casual):
    f, _ = trait_features(response(gts_items=tuple(gts), genre_puzzles=puzzles, genre_casual=casual))
    assert 1 <= f["PropensityToTrust"] <= 5
    for k in ("GenrePuzzles", "GenreCasual", "BrainhexSocializer", "SameGenderCoPlayer"):
        assert f[k] in (0.0, 1.0)


def test_response_validation():
    with pytest.raises(ValueError):
        response(gts_items=(6,) * 6)
    with pytest.raises(ValueError):
        response(tipi_items=(4,) * 9)
    with pytest.raises(ValueError):
        response(gamer_identification=101)


def test_questionnaire_csv_round_trip(tmp_path):
    r = response(partner_gender=None, tipi_items=(1, 2, 3, 4, 5, 6, 7, 1, 2, 3))
    write_questionnaires([("p1", r, [5.0] * 10 + [6.5])], tmp_path / "q.csv")
    rows = read_questionnaires(tmp_path / "q.csv")
    back, items = rows["p1"]
    assert back == r
    assert items == [5.0] * 10 + [6.5]


def test_questionnaire_csv_errors(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("participant_id,tipi_1\np1,4\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing columns"):
        read_questionnaires(p)
