from __future__ import annotations

import numpy as np
import pytest

from affiliation.core import SCHEMA, kendall_tau_b
from affiliation.pipeline import extract_corpus
from affiliation.synth import SynthConfig, generate, write_corpus


def taus(data) -> np.ndarray:
    y = data.affiliation
    out = np.full(len(SCHEMA), np.nan)
    for j in range(len(SCHEMA)):
        ok = data.valid[:, j]
        if np.ptp(data.X[ok, j]) > 0:
            out[j] = kendall_tau_b(data.X[ok, j], y[ok])
    return out


def tau(data, name):
    return taus(data)[SCHEMA.index(name)]


@pytest.fixture(scope="module")
def strong_corpus():
    return generate(SynthConfig(n_dyads=100, signal_strength=1.0, seed=3, affected_channels=("chronemics",)))[1]


def test_deterministic_under_seed():
    a = generate(SynthConfig(n_dyads=3, seed=9))[1]
    b = generate(SynthConfig(n_dyads=3, seed=9))[1]
    c = generate(SynthConfig(n_dyads=3, seed=10))[1]
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(np.nan_to_num(a.X), np.nan_to_num(c.X))


def test_dataset_shape_and_ids():
    sessions, data = generate(SynthConfig(n_dyads=4, seed=1))
    assert data.X.shape == (8, 75)
    assert data.dyads() == ["d001", "d002", "d003", "d004"]
    assert all(1 <= a <= 7 for a in data.affiliation)
    assert [p.participant_id for p in sessions[0].participants] == ["d001a", "d001b"]


def test_null_corpus_is_independent_of_labels():
    # A single corpus of 200 participants still shows chance correlations
    # (sampling SD of tau near 0.05), so tau is averaged over five corpora.
    runs = np.vstack([taus(generate(SynthConfig(n_dyads=100, signal_strength=0.0, seed=s))[1])
                      for s in range(5)])
    mean = np.nanmean(runs, axis=0)
    assert np.all(np.abs(mean[np.isfinite(mean)]) < 0.1)
    # and most features stay under 0.1 even in one corpus
    assert np.mean(np.abs(runs[0][np.isfinite(runs[0])]) < 0.1) > 0.85


def test_strong_chronemics_signal(strong_corpus):
    assert tau(strong_corpus, "CountConversationalTurns") > 0.3
    assert tau(strong_corpus, "AvgPauseSegmentLength") < -0.3


def test_unaffected_channels_stay_flat(strong_corpus):
    t = taus(strong_corpus)
    for name in ("CountWordsPronounI", "CountWordsAnalytic", "CountHorizontalPushes", "PropensityToTrust"):
        assert abs(t[SCHEMA.index(name)]) < 0.15


def test_planted_content_directions():
    data = generate(SynthConfig(n_dyads=60, signal_strength=1.0, seed=4,
                                affected_channels=("comm_content", "in_game_behaviour", "self_report")))[1]
    assert tau(data, "CountWordsAnalytic") < -0.2
    assert tau(data, "CountWordsPronounI") > 0.2
    assert tau(data, "CountHorizontalPushes") > 0.1
    assert tau(data, "PropensityToTrust") > 0.1


def test_affiliation_moments_match_target():
    data = generate(SynthConfig(n_dyads=200, signal_strength=0.0, seed=5))[1]
    assert data.affiliation.mean() == pytest.approx(5.31, abs=0.15)
    assert data.affiliation.std(ddof=1) == pytest.approx(1.28, abs=0.15)


def test_missing_rate_invalidates_visual_features():
    data = generate(SynthConfig(n_dyads=30, seed=6, missing_rate=0.5))[1]
    bad = {SCHEMA.category_of(n) for n, col in zip(SCHEMA.names, (~data.valid).any(axis=0)) if col}
    assert bad == {"facial_expression", "eye_blink"}
    clean = generate(SynthConfig(n_dyads=5, seed=6, missing_rate=0.0))[1]
    assert clean.valid.all()


@pytest.mark.parametrize("audio", ["wav", "timeline"])
def test_corpus_round_trip_is_exact(tmp_path, audio):
    sessions, data = generate(SynthConfig(n_dyads=3, seed=7))
    write_corpus(sessions, tmp_path, audio=audio)
    back = extract_corpus(tmp_path)
    assert back.participant_ids == data.participant_ids
    np.testing.assert_array_equal(back.valid, data.valid)
    np.testing.assert_allclose(back.X[back.valid], data.X[data.valid], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(back.affiliation, data.affiliation)


@pytest.mark.parametrize("kw", [dict(n_dyads=2), dict(signal_strength=1.5), dict(noise_sd=0),
                                dict(affected_channels=("gaze",)), dict(duration=30), dict(within_dyad_corr=1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SynthConfig(**kw)


def test_config_dict_round_trip():
    cfg = SynthConfig(n_dyads=5, affected_channels=["eye_blink"])
    assert SynthConfig.from_dict(cfg.to_dict()) == cfg
