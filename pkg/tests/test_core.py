from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from affiliation.core import (
    CATEGORIES, SCHEMA, Dataset, FeatureVector, Sample, SchemaError, cronbach_alpha,
    kendall_tau_b, median_split, read_feature_table, score_affiliation, write_feature_table,
)
from helpers import affiliation_dataset, make_dataset

# Reference schema, in order, verbatim (including the "Affilitation" spelling)
REFERENCE_SCHEMA = {
    "chronemics": [
        "TimeSpeaking", "CountSpeechSegments", "CountConversationalTurns", "AvgSpeechSegmentLength",
        "AvgPauseSegmentLength", "SDSpeechSegmentLength", "IsDominantSpeakTime", "IsDominantConvTurns",
        "TimeSilence", "FractionTimeSilence", "AverageSilenceLength", "FirstSilenceLength",
    ],
    "comm_content": [
        "CountTotalWords", "CountWordsAnalytic", "CountWordsClout", "CountWordsAuthentic",
        "CountWordsTone", "CountWordsPronounI", "CountWordsPronounWe", "CountWordsPronounYou",
        "CountWordsNumber", "CountWordsAffect", "CountWordsPosEmo", "CountWordsNegEmo",
        "CountWordsSocial", "CountWordsAffilitation", "CountWordsMotion", "CountWordsSpace",
        "CountWordsTime",
    ],
    "eye_blink": ["MeanBlinkRate", "StdBlinkRate"],
    "in_game_behaviour": ["CountVerticalPushes", "CountHorizontalPushes"],
    "facial_expression": [
        f"{e}{k}" for e in ("Engagement", "Contempt", "Surprise", "Anger", "Sadness", "Disgust",
                            "Fear", "Joy") for k in ("Mean", "Peaks")
    ],
    "performance": [
        "ScoreRound1", "ScoreRound2", "ScoreCollector", "ScorePusher", "ScoreDiffRounds",
        "ScoreAbsDiffRounds", "ScoreDiffRole", "ScoreAbsDiffRole", "ScoreOverall", "ScoreMean",
        "ScoreMin", "ScoreMax",
    ],
    "self_report": [
        "Age", "GamerIdentification", "GenrePuzzles", "GenreCasual", "SameGenderCoPlayer", "Gender",
        "GenderCoPlayer", "Extraversion", "Agreeableness", "Conscientiousness", "EmotionalStability",
        "Openness", "PropensityToTrust", "BrainhexSocializer",
    ],
}


def test_schema_layout():
    assert len(SCHEMA) == 75
    assert len(set(SCHEMA.names)) == 75
    assert [SCHEMA.category_sizes()[c] for c in CATEGORIES] == [12, 17, 2, 2, 16, 12, 14]
    for cat, names in REFERENCE_SCHEMA.items():
        assert [n for n in SCHEMA.names if SCHEMA.category_of(n) == cat] == names


def test_feature_vector_rejects_nonfinite_valid_cells():
    values = np.zeros(75)
    values[3] = np.inf
    with pytest.raises(SchemaError):
        FeatureVector(values, np.ones(75, bool))
    fv = FeatureVector(values, np.arange(75) != 3)
    assert np.isnan(fv.values[3])


def test_dataset_requires_two_partners_per_dyad():
    fv = FeatureVector(np.zeros(75), np.ones(75, bool))
    with pytest.raises(SchemaError):
        Dataset((Sample("a", "d1", fv, 4.0), Sample("b", "d1", fv, 4.0), Sample("c", "d2", fv, 4.0)))
    with pytest.raises(SchemaError):
        Dataset((Sample("a", "d1", fv, 4.0), Sample("a", "d1", fv, 4.0)))


# score_affiliation


def test_score_affiliation_examples():
    assert score_affiliation([7] * 11) == 7.0
    assert score_affiliation([1] * 11) == 1.0
    assert score_affiliation([4] * 10 + [6]) == pytest.approx(46 / 11)


@pytest.mark.parametrize("items, index", [([4] * 10 + [8], 10), ([0] + [4] * 10, 0), ([4, None] + [4] * 9, 1)])
def test_score_affiliation_rejects_bad_items(items, index):
    with pytest.raises(ValueError, match=f"item {index}"):
        score_affiliation(items)


def test_score_affiliation_needs_eleven_items():
    with pytest.raises(ValueError):
        score_affiliation([4] * 10)


items = st.lists(st.integers(1, 7), min_size=11, max_size=11)


@given(items, st.randoms())
def test_score_affiliation_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert score_affiliation(xs) == pytest.approx(score_affiliation(ys), abs=1e-12)


@given(items, st.integers(0, 10))
def test_score_affiliation_monotone(xs, i):
    if xs[i] == 7:
        return
    ys = list(xs)
    ys[i] += 1
    assert score_affiliation(ys) > score_affiliation(xs)


# cronbach_alpha


def test_cronbach_alpha_examples():
    col = np.arange(10.0)
    assert cronbach_alpha(np.tile(col[:, None], (1, 11))) == pytest.approx(1.0)
    assert cronbach_alpha([[1] * 11, [2] * 11]) == pytest.approx(1.0)
    x = np.random.default_rng(0).standard_normal((10000, 11))
    assert abs(cronbach_alpha(x)) < 0.05


def test_cronbach_alpha_formula_oracle():
    m = np.random.default_rng(1).integers(1, 8, (30, 11)).astype(float)
    k = 11
    item_var = sum(np.var(m[:, j], ddof=1) for j in range(k))
    total = np.var(m.sum(axis=1), ddof=1)
    assert cronbach_alpha(m) == pytest.approx(k / (k - 1) * (1 - item_var / total), rel=1e-12)


def test_cronbach_alpha_undefined():
    with pytest.raises(ValueError):
        cronbach_alpha(np.ones((5, 11)))


@given(st.integers(0, 10), st.floats(-100, 100))
@settings(max_examples=50)
def test_cronbach_alpha_shift_invariant(col, c):
    m = np.random.default_rng(col).normal(size=(20, 11)) + np.arange(20)[:, None] * 0.3
    shifted = m.copy()
    shifted[:, col] += c
    assert cronbach_alpha(shifted) == pytest.approx(cronbach_alpha(m), abs=1e-9)


# median_split


def _labels(scores):
    return [s.binary_label for s in median_split(affiliation_dataset(scores)).samples]


def test_median_split_examples():
    assert _labels([1, 2, 3, 4]) == ["low", "low", "high", "high"]
    assert _labels([5, 5, 5, 5]) == ["low"] * 4


def test_median_split_group_sizes_24_22():
    # 46 scores around Mdn 5.46 with ties at the median, 24 of them <= median
    rng = np.random.default_rng(3)
    low = np.sort(rng.uniform(1.5, 5.45, 22))
    high = np.sort(rng.uniform(5.5, 7.0, 22))
    scores = np.concatenate((low, [5.4545, 5.4545], high))
    assert np.median(scores) == pytest.approx(5.4545)
    labels = _labels(scores)
    assert (labels.count("low"), labels.count("high")) == (24, 22)


def test_median_split_empty():
    with pytest.raises(ValueError):
        median_split(Dataset(()))


@given(st.lists(st.floats(1, 7), min_size=2, max_size=40, unique=True).filter(lambda v: len(v) % 2 == 0))
def test_median_split_balanced_for_distinct_scores(scores):
    labels = _labels(scores)
    assert abs(labels.count("low") - labels.count("high")) <= 1


# kendall_tau_b


def _tau_bruteforce(x, y):
    n = len(x)
    c = d = tx = ty = 0
    for i, j in itertools.combinations(range(n), 2):
        sx = np.sign(x[i] - x[j])
        sy = np.sign(y[i] - y[j])
        if sx == 0:
            tx += 1
        if sy == 0:
            ty += 1
        if sx * sy > 0:
            c += 1
        elif sx * sy < 0:
            d += 1
    n0 = n * (n - 1) / 2
    return (c - d) / np.sqrt((n0 - tx) * (n0 - ty))


def test_kendall_examples():
    assert kendall_tau_b([1, 2, 3], [10, 20, 30]) == 1.0
    assert kendall_tau_b([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau_b([1, 2, 2, 3], [1, 3, 2, 4]) == pytest.approx(_tau_bruteforce([1, 2, 2, 3], [1, 3, 2, 4]))


def test_kendall_undefined():
    with pytest.raises(ValueError):
        kendall_tau_b([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau_b([1, 2], [1, 2, 3])


tied_lists = st.lists(st.integers(0, 5), min_size=3, max_size=25)


@given(st.data())
def test_kendall_matches_bruteforce_and_scipy(data):
    x = data.draw(tied_lists)
    y = data.draw(st.lists(st.integers(0, 5), min_size=len(x), max_size=len(x)))
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    tau = kendall_tau_b(x, y)
    assert tau == pytest.approx(_tau_bruteforce(x, y), abs=1e-12)
    assert tau == pytest.approx(stats.kendalltau(x, y, variant="b").statistic, abs=1e-12)
    assert kendall_tau_b(y, x) == pytest.approx(tau, abs=1e-12)


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=20), st.randoms())
def test_kendall_sign_flip(x, rnd):
    if len(set(x)) < 2:
        return
    y = list(range(len(x)))
    rnd.shuffle(y)
    assert kendall_tau_b(x, [-v for v in y]) == pytest.approx(-kendall_tau_b(x, y), abs=1e-12)


# feature table CSV


def test_feature_table_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.standard_normal((6, 75)) * 10.0 ** rng.integers(-8, 8, (6, 75))
    valid = rng.random((6, 75)) > 0.1
    data = make_dataset(X, rng.uniform(1, 7, 6), valid=valid)
    path = tmp_path / "t.csv"
    write_feature_table(data, path)
    back = read_feature_table(path)
    assert back.participant_ids == data.participant_ids
    assert back.dyad_ids == data.dyad_ids
    np.testing.assert_array_equal(back.valid, data.valid)
    np.testing.assert_array_equal(back.X[data.valid], data.X[data.valid])
    np.testing.assert_array_equal(back.affiliation, data.affiliation)
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[:3] == ["participant_id", "dyad_id", "affiliation"]
    assert "NA" in path.read_text(encoding="utf-8")


def test_feature_table_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("participant_id,dyad_id,affiliation\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="missing columns"):
        read_feature_table(path)
