from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affiliation.visual import (
    EMOTIONS, FrameDataError, FrameSeries, blink_features, blink_onsets, detection_spans,
    facial_features, read_frames, write_frames,
)

FPS = 10.0


def series(n, joy=None, detected=None, eyes=None, fps=FPS):
    t = np.arange(n) / fps
    det = np.ones(n, bool) if detected is None else np.asarray(detected, bool)
    emo = np.zeros((n, len(EMOTIONS)))
    if joy is not None:
        emo[:, EMOTIONS.index("joy")] = joy
    emo[~det] = np.nan
    if eyes is not None:
        eyes = np.asarray(eyes, float).copy()
        eyes[~det] = np.nan
    return FrameSeries(fps, t, det, emo, eyes)


def blinking(minutes, blink_times, fps=FPS, detected=None):
    n = int(minutes * 60 * fps)
    eyes = np.zeros(n)
    idx = np.round(np.asarray(blink_times) * fps).astype(int)
    eyes[idx] = 1.0
    return series(n, eyes=eyes, detected=detected, fps=fps)


# facial expression


def test_flat_zero():
    f, ok = facial_features(series(100, joy=np.zeros(100)))
    assert f["JoyMean"] == 0 and f["JoyPeaks"] == 0 and ok


def test_run_scan_example():
    f, _ = facial_features(series(9, joy=[0, 0, 60, 70, 60, 0, 0, 80, 0]))
    assert f["JoyPeaks"] == 2
    assert f["JoyMean"] == pytest.approx(30.0)


def test_peak_run_needs_drop_to_threshold():
    # dipping to exactly 50 ends a run; staying above does not
    assert facial_features(series(5, joy=[60, 50, 60, 0, 0]))[0]["JoyPeaks"] == 2
    assert facial_features(series(5, joy=[60, 51, 60, 0, 0]))[0]["JoyPeaks"] == 1


def test_face_ratio_validity():
    det = np.arange(100) % 4 != 0  # 75 %
    assert not facial_features(series(100, detected=det))[1]
    det = np.ones(100, bool)
    det[:20] = False  # exactly 80 %, not over
    assert not facial_features(series(100, detected=det))[1]
    det[0] = True  # 81 %
    assert facial_features(series(100, detected=det))[1]


def test_means_skip_undetected_frames():
    det = np.array([True, False, True, True])
    f, _ = facial_features(series(4, joy=[10, 0, 20, 30], detected=det))
    assert f["JoyMean"] == pytest.approx(20.0)


def test_has_sixteen_features():
    f, _ = facial_features(series(10))
    assert len(f) == 16


@given(st.lists(st.floats(0, 100), min_size=2, max_size=30), st.integers(0, 29), st.integers(1, 5))
@settings(max_examples=100)
def test_peaks_invariant_to_inserted_low_frames(trace, pos, k):
    pos = min(pos, len(trace))
    # insert below-threshold frames only between runs (next to a low frame)
    if 0 < pos < len(trace) and trace[pos - 1] > 50 and trace[pos] > 50:
        return
    longer = trace[:pos] + [10.0] * k + trace[pos:]
    a = facial_features(series(len(trace), joy=trace))[0]["JoyPeaks"]
    b = facial_features(series(len(longer), joy=longer))[0]["JoyPeaks"]
    assert a == b


def test_rejects_bad_frames():
    with pytest.raises(FrameDataError):
        FrameSeries(FPS, [0.0, 0.2, 0.1], np.ones(3, bool), np.zeros((3, 8)))
    with pytest.raises(FrameDataError):
        FrameSeries(FPS, [0.0, 0.1], np.ones(2, bool), np.full((2, 8), 120.0))
    with pytest.raises(FrameDataError):
        FrameSeries(FPS, [0.0, 0.1], np.ones(2, bool), np.full((2, 8), np.nan))


# blinks


def test_no_blinks():
    f, ok = blink_features(series(3600, eyes=np.zeros(3600)))
    assert f == {"MeanBlinkRate": 0.0, "StdBlinkRate": 0.0} and ok


def test_one_blink_per_second():
    f, ok = blink_features(blinking(6, np.arange(360) + 0.5))
    assert f["MeanBlinkRate"] == pytest.approx(60.0)
    assert f["StdBlinkRate"] == pytest.approx(0.0, abs=1e-9)
    assert ok


def test_blink_validity_rules():
    n = 3600
    det = np.ones(n, bool)
    det[np.random.default_rng(0).choice(n, int(0.12 * n), replace=False)] = False
    assert not blink_features(blinking(6, [10.5, 20.5], detected=det))[1]
    # 4 minutes of continuous detection is too short
    assert not blink_features(blinking(4, [10.5, 20.5]))[1]
    # a contiguous loss of 5 % that leaves no 5-minute span
    det = np.ones(n, bool)
    det[1700:1880] = False
    assert not blink_features(blinking(6, [10.5], detected=det))[1]


def test_single_dropped_frame_does_not_split_span():
    det = np.ones(3600, bool)
    det[::50] = False
    det[0] = True
    s = series(3600, eyes=np.zeros(3600), detected=det)
    assert len(detection_spans(s)) == 1
    assert blink_features(s)[1]


def test_long_closures_are_not_blinks():
    eyes = np.zeros(100)
    eyes[10] = 1  # 0.1 s blink
    eyes[40:50] = 1  # 1 s closure
    assert blink_onsets(series(100, eyes=eyes)).tolist() == [1.0]


def test_eye_state_required_on_detected_frames():
    eyes = np.zeros(10)
    eyes[3] = np.nan
    s = FrameSeries(FPS, np.arange(10) / FPS, np.ones(10, bool), np.zeros((10, 8)), eyes)
    with pytest.raises(FrameDataError):
        blink_features(s)


@pytest.mark.parametrize("seed", range(6))
def test_isolated_blink_rate(seed):
    rng = np.random.default_rng(seed)
    minutes = rng.uniform(5, 8)
    k = int(rng.integers(20, 200))
    slots = np.sort(rng.choice(int(minutes * 60) - 2, k, replace=False)) + 1.3
    f, _ = blink_features(blinking(minutes, slots))
    assert f["MeanBlinkRate"] == pytest.approx(k / minutes, rel=0.05)


def test_frame_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    n = 50
    det = rng.random(n) > 0.2
    emo = np.round(rng.uniform(0, 100, (n, 8)), 2)
    emo[~det] = np.nan
    eyes = (rng.random(n) < 0.1).astype(float)
    eyes[~det] = np.nan
    s = FrameSeries(FPS, np.arange(n) / FPS, det, emo, eyes)
    write_frames(s, tmp_path / "f.csv")
    back = read_frames(tmp_path / "f.csv")
    assert back.fps == pytest.approx(FPS)
    np.testing.assert_array_equal(back.face_detected, det)
    np.testing.assert_allclose(back.emotions, emo)
    np.testing.assert_array_equal(np.isnan(back.eyes_closed), np.isnan(eyes))


def test_frame_csv_errors_name_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,face_detected\n0,1\n", encoding="utf-8")
    with pytest.raises(FrameDataError, match="bad.csv"):
        read_frames(p)
    header = ",".join(("t", "face_detected") + EMOTIONS + ("eyes_closed",))
    p.write_text(header + "\n0,maybe" + ",1" * 9 + "\n", encoding="utf-8")
    with pytest.raises(FrameDataError, match="bad.csv:2"):
        read_frames(p)
