"""Speech/pause segmentation and conversation timing features.

Each participant has their own audio track. A track is segmented into
alternating speech and pause intervals by windowed RMS thresholding; the
pairwise features (turns, silence, dominance) then compare the two
timelines of a dyad.
"""

from __future__ import annotations

import csv
import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

SPEECH = "speech"
PAUSE = "pause"


class AudioFormatError(ValueError):
    """Raised for WAV files that are not 16-bit PCM mono."""


@dataclass(frozen=True)
class AudioTrack:
    sample_rate: int
    samples: np.ndarray
    start_offset: float = 0.0

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate < 8000:
            raise ValueError(f"sample rate must be an integer >= 8000 Hz, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("audio track must be a nonempty mono sequence")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


class Segment(NamedTuple):
    start: float
    end: float
    kind: str


@dataclass(frozen=True)
class SegmentTimeline:
    """Alternating speech/pause segments tiling ``[0, duration]``."""

    duration: float
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(Segment(float(a), float(b), k) for a, b, k in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("timeline needs at least one segment")
        if segs[0].start != 0.0 or not math.isclose(segs[-1].end, self.duration, abs_tol=1e-9):
            raise ValueError("segments must tile [0, duration]")
        for prev, cur in zip(segs, segs[1:]):
            if cur.start != prev.end:
                raise ValueError("segments must be contiguous")
            if cur.kind == prev.kind:
                raise ValueError("segment kinds must alternate")
        for s in segs:
            if s.kind not in (SPEECH, PAUSE):
                raise ValueError(f"unknown segment kind {s.kind!r}")
            if not s.start < s.end:
                raise ValueError(f"empty segment {s}")

    @classmethod
    def from_speech(cls, speech: list[tuple[float, float]], duration: float) -> "SegmentTimeline":
        """Build a timeline from sorted, non-overlapping speech intervals."""
        segs: list[Segment] = []
        t = 0.0
        for a, b in speech:
            a, b = max(a, 0.0), min(b, duration)
            if b <= a:
                continue
            if segs and a <= t:
                # touching or overlapping intervals merge into the previous run
                last = segs.pop()
                segs.append(Segment(last.start, max(b, last.end), SPEECH))
                t = segs[-1].end
                continue
            if a > t:
                segs.append(Segment(t, a, PAUSE))
            segs.append(Segment(a, b, SPEECH))
            t = b
        if t < duration:
            segs.append(Segment(t, duration, PAUSE))
        return cls(duration, tuple(segs))

    def of_kind(self, kind: str) -> list[Segment]:
        return [s for s in self.segments if s.kind == kind]

    @property
    def speech(self) -> list[Segment]:
        return self.of_kind(SPEECH)

    @property
    def pauses(self) -> list[Segment]:
        return self.of_kind(PAUSE)

    def truncated(self, duration: float) -> "SegmentTimeline":
        segs = [
            Segment(s.start, min(s.end, duration), s.kind)
            for s in self.segments
            if s.start < duration
        ]
        return SegmentTimeline(duration, tuple(segs))

    @classmethod
    def from_csv(cls, path: str | Path, duration: float | None = None) -> "SegmentTimeline":
        """Read a (start, end, kind) CSV; the duration defaults to the last segment end."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            segs = [Segment(float(r["start"]), float(r["end"]), r["kind"]) for r in rows]
            return cls(duration if duration is not None else segs[-1].end, tuple(segs))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: invalid timeline ({exc})") from None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["start", "end", "kind"])
            for s in self.segments:
                w.writerow([repr(s.start), repr(s.end), s.kind])


@dataclass(frozen=True)
class VadParams:
    window: float = 0.05
    rms_threshold: float = 0.10
    min_speech: float = 0.2
    max_gap: float = 0.3

    def __post_init__(self):
        if min(self.window, self.rms_threshold, self.min_speech, self.max_gap) <= 0:
            raise ValueError("VAD parameters must be positive")
        if self.min_speech < self.window:
            raise ValueError("min_speech must be at least one window")


def _runs(mask: np.ndarray) -> list[tuple[int, int, bool]]:
    """(start, stop, value) runs of a boolean array."""
    if mask.size == 0:
        return []
    edges = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [mask.size]))
    return [(int(a), int(b), bool(mask[a])) for a, b in zip(starts, stops)]


def segment_speech(track: AudioTrack, params: VadParams = VadParams()) -> SegmentTimeline:
    """Split a track into speech and pause segments by RMS thresholding.

    The threshold is relative: ``rms_threshold`` times the 95th percentile of
    the window RMS values of this track. Speech runs separated by gaps
    shorter than ``max_gap`` are merged first, then runs shorter than
    ``min_speech`` are dropped.
    """
    sr = track.sample_rate
    win = int(round(params.window * sr))
    n = len(track.samples)
    if n < win:
        raise ValueError("track is shorter than one analysis window")
    n_win = -(-n // win)
    padded = np.zeros(n_win * win)
    padded[:n] = track.samples
    frames = padded.reshape(n_win, win)
    # the last window may be partial; average over its real samples only
    counts = np.full(n_win, win)
    counts[-1] = n - (n_win - 1) * win
    rms = np.sqrt((frames**2).sum(axis=1) / counts)
    threshold = params.rms_threshold * np.percentile(rms, 95)
    active = rms > threshold

    win_s = win / sr
    max_gap_w = params.max_gap / win_s
    min_speech_w = params.min_speech / win_s
    runs = _runs(active)
    # gaps bounded by speech on both sides and shorter than max_gap are closed
    for i in range(1, len(runs) - 1):
        a, b, v = runs[i]
        if not v and (b - a) < max_gap_w - 1e-9:
            active[a:b] = True
    for a, b, v in _runs(active):
        if v and (b - a) < min_speech_w - 1e-9:
            active[a:b] = False

    duration = track.duration
    segs = []
    for a, b, v in _runs(active):
        start = a * win_s
        end = min(b * win_s, duration)
        segs.append(Segment(start, end, SPEECH if v else PAUSE))
    segs[-1] = Segment(segs[-1].start, duration, segs[-1].kind)
    return SegmentTimeline(duration, tuple(segs))


def render_timeline(tl: SegmentTimeline, sample_rate: int = 8000, amplitude: float = 0.5) -> AudioTrack:
    """Constant-amplitude square-wave rendering of a timeline (for tests and demos)."""
    n = int(round(tl.duration * sample_rate))
    out = np.zeros(n)
    t = np.arange(n) / sample_rate
    carrier = amplitude * np.sign(np.sin(2 * np.pi * 220.0 * t + 0.1))
    for s in tl.speech:
        a, b = int(round(s.start * sample_rate)), int(round(s.end * sample_rate))
        out[a:b] = carrier[a:b]
    return AudioTrack(sample_rate, out)


def read_wav(path: str | Path, start_offset: float = 0.0) -> AudioTrack:
    """Read a 16-bit PCM mono WAV file, normalized to [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: not a readable WAV file ({exc})") from None
    if channels != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
    data = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    if data.size == 0:
        raise AudioFormatError(f"{path}: no audio frames")
    try:
        return AudioTrack(rate, data, start_offset)
    except ValueError as exc:
        raise AudioFormatError(f"{path}: {exc}") from None


def write_wav(track: AudioTrack, path: str | Path) -> None:
    pcm = np.clip(np.round(track.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(track.sample_rate)
        w.writeframes(pcm.tobytes())


def align_tracks(a: AudioTrack, b: AudioTrack) -> tuple[AudioTrack, AudioTrack]:
    """Shift both tracks to a common origin and cut them to the common duration."""
    origin = max(a.start_offset, b.start_offset)
    end = min(a.start_offset + a.duration, b.start_offset + b.duration)
    if end <= origin:
        raise ValueError("audio tracks do not overlap in time")

    def cut(tr: AudioTrack) -> AudioTrack:
        i0 = int(round((origin - tr.start_offset) * tr.sample_rate))
        i1 = i0 + int(round((end - origin) * tr.sample_rate))
        return AudioTrack(tr.sample_rate, tr.samples[i0:i1], 0.0)

    return cut(a), cut(b)


def speaker_features(tl: SegmentTimeline) -> tuple[dict[str, float], dict[str, bool]]:
    """Single-speaker timing features and their validity flags."""
    speech = np.array([s.end - s.start for s in tl.speech])
    pause = np.array([s.end - s.start for s in tl.pauses])
    feats = {
        "TimeSpeaking": float(speech.sum()),
        "CountSpeechSegments": float(len(speech)),
        "AvgSpeechSegmentLength": float(speech.mean()) if len(speech) else 0.0,
        "AvgPauseSegmentLength": float(pause.mean()) if len(pause) else 0.0,
        "SDSpeechSegmentLength": float(speech.std(ddof=1)) if len(speech) > 1 else 0.0,
    }
    valid = dict.fromkeys(feats, True)
    if not len(speech):
        valid["AvgSpeechSegmentLength"] = valid["SDSpeechSegmentLength"] = False
    if not len(pause):
        valid["AvgPauseSegmentLength"] = False
    return feats, valid


def _check_durations(tl_a: SegmentTimeline, tl_b: SegmentTimeline) -> None:
    if not math.isclose(tl_a.duration, tl_b.duration, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"timeline durations differ: {tl_a.duration} vs {tl_b.duration}")


def _count_turns(own: list[Segment], partner_onsets: np.ndarray) -> int:
    if not own:
        return 0
    turns = 1
    for prev, nxt in zip(own, own[1:]):
        # merged span would be (prev.start, nxt.end); a partner onset inside ends the turn
        inside = np.any((partner_onsets > prev.start) & (partner_onsets < nxt.end))
        turns += int(inside)
    return turns


def conversational_turns(tl_a: SegmentTimeline, tl_b: SegmentTimeline) -> tuple[int, int]:
    """Number of turns per speaker.

    A turn is a maximal run of a speaker's consecutive segments, containing
    at least one speech segment, with no speech onset of the partner
    strictly inside its span.
    """
    _check_durations(tl_a, tl_b)
    onsets_a = np.array([s.start for s in tl_a.speech])
    onsets_b = np.array([s.start for s in tl_b.speech])
    return _count_turns(tl_a.speech, onsets_b), _count_turns(tl_b.speech, onsets_a)


def silence_intervals(tl_a: SegmentTimeline, tl_b: SegmentTimeline) -> list[tuple[float, float]]:
    """Maximal intervals during which neither speaker is speaking."""
    _check_durations(tl_a, tl_b)
    out = []
    i = j = 0
    pa, pb = tl_a.pauses, tl_b.pauses
    while i < len(pa) and j < len(pb):
        lo = max(pa[i].start, pb[j].start)
        hi = min(pa[i].end, pb[j].end)
        if lo < hi:
            if out and out[-1][1] == lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        if pa[i].end < pb[j].end:
            i += 1
        else:
            j += 1
    return out


def silence_features(
    tl_a: SegmentTimeline, tl_b: SegmentTimeline
) -> tuple[dict[str, float], dict[str, bool]]:
    intervals = silence_intervals(tl_a, tl_b)
    total = sum(b - a for a, b in intervals)
    onsets = [s.start for s in tl_a.speech + tl_b.speech]
    feats = {
        "TimeSilence": total,
        "FractionTimeSilence": total / tl_a.duration,
        "AverageSilenceLength": total / len(intervals) if intervals else 0.0,
        "FirstSilenceLength": min(onsets) if onsets else tl_a.duration,
    }
    valid = dict.fromkeys(feats, True)
    valid["AverageSilenceLength"] = bool(intervals)
    return feats, valid


def dominance(
    tl_a: SegmentTimeline, tl_b: SegmentTimeline, turns_a: int, turns_b: int
) -> tuple[dict[str, bool], dict[str, bool]]:
    """Strict-inequality dominance flags for speaking time and turns; ties give False."""
    time_a = sum(s.end - s.start for s in tl_a.speech)
    time_b = sum(s.end - s.start for s in tl_b.speech)
    a = {"IsDominantSpeakTime": time_a > time_b, "IsDominantConvTurns": turns_a > turns_b}
    b = {"IsDominantSpeakTime": time_b > time_a, "IsDominantConvTurns": turns_b > turns_a}
    return a, b


def dyad_chronemics(
    tl_a: SegmentTimeline, tl_b: SegmentTimeline
) -> tuple[tuple[dict, dict], tuple[dict, dict]]:
    """All 12 chronemic features for both partners: ((values_a, valid_a), (values_b, valid_b))."""
    turns_a, turns_b = conversational_turns(tl_a, tl_b)
    sil, sil_ok = silence_features(tl_a, tl_b)
    dom_a, dom_b = dominance(tl_a, tl_b, turns_a, turns_b)
    out = []
    for tl, turns, dom in ((tl_a, turns_a, dom_a), (tl_b, turns_b, dom_b)):
        f, ok = speaker_features(tl)
        f["CountConversationalTurns"] = float(turns)
        ok["CountConversationalTurns"] = True
        for k, v in dom.items():
            f[k] = float(v)
            ok[k] = True
        f.update(sil)
        ok.update(sil_ok)
        out.append((f, ok))
    return out[0], out[1]
