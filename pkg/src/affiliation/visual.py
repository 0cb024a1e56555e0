"""Aggregation of per-frame face-analysis outputs.

The detectors themselves are external; this module consumes their per-frame
records (emotion confidences 0-100, eye state) and reduces them to the 16
facial-expression and 2 eye-blink features.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMOTIONS = ("engagement", "contempt", "surprise", "anger", "sadness", "disgust", "fear", "joy")
FRAME_COLUMNS = ("t", "face_detected") + EMOTIONS + ("eyes_closed",)

PEAK_THRESHOLD = 50.0
MIN_FACE_RATIO = 0.80
MAX_BLINK_UNDETECTED = 0.10
MIN_DETECTION_SPAN = 300.0


class FrameDataError(ValueError):
    pass


@dataclass(frozen=True)
class FrameSeries:
    """Per-frame detector output.

    ``emotions`` is an (n_frames, 8) array with NaN rows on frames without a
    detected face; ``eyes_closed`` is a float array of 0/1 with NaN where
    unknown, or None when the stream carries no eye state at all.
    """

    fps: float
    t: np.ndarray
    face_detected: np.ndarray
    emotions: np.ndarray
    eyes_closed: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        det = np.asarray(self.face_detected, dtype=bool)
        emo = np.asarray(self.emotions, dtype=float).reshape(len(t), len(EMOTIONS))
        if t.size == 0:
            raise FrameDataError("frame series is empty")
        if np.any(np.diff(t) <= 0):
            raise FrameDataError("frame timestamps must be strictly increasing")
        if det.shape != t.shape:
            raise FrameDataError("face_detected must have one entry per frame")
        if np.any(np.isnan(emo[det])):
            raise FrameDataError("detected frames must carry all emotion confidences")
        if np.any((emo[det] < 0) | (emo[det] > 100)):
            raise FrameDataError("emotion confidences must lie in [0, 100]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "face_detected", det)
        object.__setattr__(self, "emotions", emo)
        if self.eyes_closed is not None:
            object.__setattr__(self, "eyes_closed", np.asarray(self.eyes_closed, dtype=float))

    def __len__(self) -> int:
        return len(self.t)


def _count_peaks(trace: np.ndarray, threshold: float = PEAK_THRESHOLD) -> int:
    above = trace > threshold
    if not above.any():
        return 0
    # each maximal above-threshold run counts once
    return int(above[0]) + int(np.count_nonzero(above[1:] & ~above[:-1]))


def facial_features(series: FrameSeries) -> tuple[dict[str, float], bool]:
    """Mean confidence and peak count per emotion, plus a shared validity flag.

    Means and peaks use detected frames only; undetected frames are skipped
    rather than treated as zero.
    """
    det = series.face_detected
    ratio = det.mean()
    emo = series.emotions[det]
    feats = {}
    for k, name in enumerate(EMOTIONS):
        trace = emo[:, k]
        cap = name.capitalize()
        feats[f"{cap}Mean"] = float(trace.mean()) if trace.size else 0.0
        feats[f"{cap}Peaks"] = float(_count_peaks(trace))
    return feats, bool(ratio > MIN_FACE_RATIO)


def detection_spans(series: FrameSeries, tolerance: float = 0.5) -> list[tuple[float, float]]:
    """Continuous face-detection spans.

    A single dropped frame does not split a span: consecutive detected frames
    belong together while their spacing is at most ``(2 + tolerance) / fps``.
    """
    t = series.t[series.face_detected]
    if t.size == 0:
        return []
    max_step = (2.0 + tolerance) / series.fps
    breaks = np.flatnonzero(np.diff(t) > max_step)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks, [t.size - 1]))
    return [(float(t[a]), float(t[b])) for a, b in zip(starts, stops)]


def blink_onsets(series: FrameSeries, max_closure: float = 0.5) -> np.ndarray:
    """Timestamps of closure onsets among detected frames.

    Closures longer than ``max_closure`` seconds are eye closing, not
    blinking, and are dropped.
    """
    if series.eyes_closed is None:
        raise FrameDataError("frame series has no eye-state column")
    det = series.face_detected
    closed = series.eyes_closed[det]
    if np.any(np.isnan(closed)):
        raise FrameDataError("eyes_closed is missing on a frame with a detected face")
    t = series.t[det]
    closed = closed > 0.5
    onsets = []
    i = 0
    n = len(t)
    while i < n:
        if closed[i] and (i == 0 or not closed[i - 1]):
            j = i
            while j + 1 < n and closed[j + 1]:
                j += 1
            end = t[j + 1] if j + 1 < n else t[j] + 1.0 / series.fps
            if i > 0 and end - t[i] <= max_closure:
                onsets.append(t[i])
            i = j + 1
        else:
            i += 1
    return np.asarray(onsets)


def blink_rate_series(series: FrameSeries, window: int = 5, max_closure: float = 0.5) -> np.ndarray:
    """Smoothed blink rate in blinks/min, one value per 1 s bin.

    Per-second blink counts are averaged over a centered ``window``-second
    moving window; at the edges the average runs over the bins available.
    """
    onsets = blink_onsets(series, max_closure)
    t0 = series.t[0]
    n_bins = max(1, int(np.ceil(series.t[-1] - t0 + 1.0 / series.fps)))
    counts = np.bincount(np.floor(onsets - t0).astype(int), minlength=n_bins)[:n_bins].astype(float)
    kernel = np.ones(window)
    smoothed = np.convolve(counts, kernel, mode="same") / np.convolve(np.ones(n_bins), kernel, mode="same")
    return 60.0 * smoothed


def blink_features(series: FrameSeries, max_closure: float = 0.5) -> tuple[dict[str, float], bool]:
    rate = blink_rate_series(series, max_closure=max_closure)
    undetected = 1.0 - series.face_detected.mean()
    spans = detection_spans(series)
    longest = max((b - a for a, b in spans), default=0.0)
    # a span from first to last detected frame covers one frame period less than the video
    ok = undetected <= MAX_BLINK_UNDETECTED and longest + 1.0 / series.fps >= MIN_DETECTION_SPAN
    feats = {
        "MeanBlinkRate": float(rate.mean()),
        "StdBlinkRate": float(rate.std(ddof=1)) if rate.size > 1 else 0.0,
    }
    return feats, bool(ok)


def _parse_bool(cell: str, where: str) -> float:
    c = cell.strip().lower()
    if c in ("", "na", "nan"):
        return np.nan
    if c in ("1", "true", "yes"):
        return 1.0
    if c in ("0", "false", "no"):
        return 0.0
    raise FrameDataError(f"{where}: cannot parse boolean {cell!r}")


def read_frames(path: str | Path, fps: float | None = None) -> FrameSeries:
    """Read a per-participant frame CSV (header required; empty cells on undetected frames)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in FRAME_COLUMNS[:-1]):
            raise FrameDataError(f"{path}: header must contain {', '.join(FRAME_COLUMNS)}")
        has_eyes = "eyes_closed" in reader.fieldnames
        t, det, emo, eyes = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            try:
                t.append(float(row["t"]))
            except ValueError:
                raise FrameDataError(f"{where}: bad timestamp {row['t']!r}") from None
            d = _parse_bool(row["face_detected"], where)
            det.append(d == 1.0)
            vals = []
            for e in EMOTIONS:
                cell = row[e].strip()
                try:
                    vals.append(float(cell) if cell else np.nan)
                except ValueError:
                    raise FrameDataError(f"{where}: bad {e} value {cell!r}") from None
            emo.append(vals)
            eyes.append(_parse_bool(row["eyes_closed"], where) if has_eyes else np.nan)
    if not t:
        raise FrameDataError(f"{path}: no frames")
    t_arr = np.asarray(t)
    if fps is None:
        fps = 1.0 / float(np.median(np.diff(t_arr))) if len(t_arr) > 1 else 1.0
    try:
        return FrameSeries(fps, t_arr, det, np.asarray(emo), np.asarray(eyes) if has_eyes else None)
    except FrameDataError as exc:
        raise FrameDataError(f"{path}: {exc}") from None


def write_frames(series: FrameSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FRAME_COLUMNS)
        for i in range(len(series)):
            if series.face_detected[i]:
                emo = [f"{v:.2f}" for v in series.emotions[i]]
                ec = "" if series.eyes_closed is None or np.isnan(series.eyes_closed[i]) else str(int(series.eyes_closed[i]))
            else:
                emo = [""] * len(EMOTIONS)
                ec = ""
            w.writerow([f"{series.t[i]:.4f}", int(series.face_detected[i])] + emo + [ec])
