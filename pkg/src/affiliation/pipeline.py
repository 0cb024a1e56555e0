"""From per-dyad session artifacts to participant-level feature vectors.

A corpus is a directory tree with one ``session.json`` manifest per dyad::

    {"dyad_id": "d001", "duration": 360.0,
     "gender_codes": {"female": 0, "male": 1},          # optional
     "participants": [
        {"participant_id": "d001a", "audio": "d001a.wav", "audio_offset": 0.0,
         "transcript": "d001a.txt", "frames": "d001a_frames.csv",
         "game_log": "d001a_log.jsonl", "questionnaire": "questionnaire.csv"},
        ...]}

Paths are relative to the manifest. A participant may give ``timeline``
(a start,end,kind CSV) instead of ``audio`` to skip voice activity detection.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path

from .chronemics import (
    AudioFormatError, SegmentTimeline, VadParams, align_tracks, dyad_chronemics, read_wav,
    segment_speech,
)
from .core import SCHEMA, Dataset, FeatureVector, Sample, score_affiliation
from .lexicon import Lexicon, content_features, demo_lexicon, tokenize
from .synth import DyadSession, ParticipantArtifacts
from .telemetry import GameLogError, behaviour_features, performance_features, read_game_log
from .traits import DEFAULT_GENDER_CODES, read_questionnaires, trait_features
from .visual import FrameDataError, blink_features, facial_features, read_frames

log = logging.getLogger(__name__)

MANIFEST_NAME = "session.json"


class InputError(ValueError):
    """A corpus file is missing or malformed; the message names the file."""


def _participant_features(p: ParticipantArtifacts, chron: tuple[dict, dict], lexicon: Lexicon,
                          gender_codes: dict[str, float]) -> FeatureVector:
    values: dict[str, float] = {}
    valid: dict[str, bool] = {}

    def add(feats: dict, ok):
        values.update(feats)
        for k in feats:
            valid[k] = ok if isinstance(ok, bool) else ok[k]

    add(*chron)
    add(*content_features(tokenize(p.transcript), lexicon))
    add(*facial_features(p.frames))
    add(*blink_features(p.frames))
    add(performance_features(p.game_log), True)
    add(behaviour_features(p.game_log), True)
    add(*trait_features(p.questionnaire, gender_codes))
    missing = set(SCHEMA.names) - set(values)
    if missing:
        raise AssertionError(f"extraction left features unset: {sorted(missing)}")
    return FeatureVector.from_mapping({k: (v if valid[k] else None) for k, v in values.items()})


def extract_session(session: DyadSession, lexicon: Lexicon | None = None,
                    gender_codes: dict[str, float] = DEFAULT_GENDER_CODES) -> list[Sample]:
    """Both partners' samples (feature vector + continuous affiliation)."""
    lexicon = lexicon or demo_lexicon()
    a, b = session.participants
    r1, r2 = performance_features(a.game_log), performance_features(b.game_log)
    if (r1["ScoreRound1"], r1["ScoreRound2"]) != (r2["ScoreRound1"], r2["ScoreRound2"]):
        raise InputError(f"dyad {session.dyad_id}: partners' round scores differ")
    chron = dyad_chronemics(a.timeline, b.timeline)
    out = []
    for p, ch in zip(session.participants, chron):
        fv = _participant_features(p, ch, lexicon, gender_codes)
        out.append(Sample(p.participant_id, session.dyad_id, fv, score_affiliation(p.affiliation_items)))
    return out


def find_manifests(root: str | Path) -> list[Path]:
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"{root}: not a directory")
    return sorted(root.rglob(MANIFEST_NAME))


def _file(base: Path, entry: dict, key: str) -> Path:
    if key not in entry:
        raise InputError(f"{base / MANIFEST_NAME}: participant entry lacks {key!r}")
    path = base / entry[key]
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    return path


def load_session(manifest: str | Path, vad: VadParams = VadParams()) -> tuple[DyadSession, dict]:
    """Read one dyad's artifacts; returns the session and its gender codes."""
    manifest = Path(manifest)
    base = manifest.parent
    try:
        meta = json.loads(manifest.read_text(encoding="utf-8"))
        entries = meta["participants"]
        dyad_id = str(meta["dyad_id"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{manifest}: invalid manifest ({exc})") from None
    if len(entries) != 2:
        raise InputError(f"{manifest}: a session needs exactly two participants")
    codes = {k.lower(): float(v) for k, v in meta.get("gender_codes", DEFAULT_GENDER_CODES).items()}

    timelines = _load_timelines(base, entries, meta.get("duration"), vad)
    parts = []
    quest_cache: dict[Path, dict] = {}
    for entry, tl in zip(entries, timelines):
        pid = entry.get("participant_id")
        qpath = _file(base, entry, "questionnaire")
        try:
            if qpath not in quest_cache:
                quest_cache[qpath] = read_questionnaires(qpath)
            rows = quest_cache[qpath]
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if pid not in rows:
            raise InputError(f"{qpath}: no row for participant {pid!r}")
        path = _file(base, entry, "frames")
        try:
            frames = read_frames(path)
        except (FrameDataError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
        path = _file(base, entry, "game_log")
        try:
            game = read_game_log(path)
        except (GameLogError, KeyError, ValueError) as exc:
            raise InputError(str(exc) if str(path) in str(exc) else f"{path}: {exc}") from None
        path = _file(base, entry, "transcript")
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise InputError(f"{path}: not UTF-8 text ({exc.reason})") from None
        resp, items = rows[pid]
        parts.append((pid, tl, text, frames, game, resp, tuple(items)))

    (pa, *ra), (pb, *rb) = parts
    # partner gender comes from the pairing
    qa = replace(ra[4], partner_gender=rb[4].gender)
    qb = replace(rb[4], partner_gender=ra[4].gender)
    arts = (
        ParticipantArtifacts(pa, ra[0], ra[1], ra[2], ra[3], qa, ra[5]),
        ParticipantArtifacts(pb, rb[0], rb[1], rb[2], rb[3], qb, rb[5]),
    )
    return DyadSession(dyad_id, arts[0].timeline.duration, arts), codes


def _load_timelines(base: Path, entries: list[dict], duration, vad: VadParams) -> list[SegmentTimeline]:
    if all("audio" in e for e in entries):
        tracks = []
        for e in entries:
            path = _file(base, e, "audio")
            try:
                tracks.append(read_wav(path, float(e.get("audio_offset", 0.0))))
            except AudioFormatError as exc:
                raise InputError(str(exc)) from None
        try:
            a, b = align_tracks(*tracks)
        except ValueError as exc:
            raise InputError(f"{base / MANIFEST_NAME}: {exc}") from None
        tls = [segment_speech(a, vad), segment_speech(b, vad)]
    elif all("timeline" in e for e in entries):
        tls = []
        for e in entries:
            path = _file(base, e, "timeline")
            try:
                tls.append(SegmentTimeline.from_csv(path))
            except ValueError as exc:
                raise InputError(str(exc)) from None
    else:
        raise InputError(f"{base / MANIFEST_NAME}: both participants need 'audio' or both 'timeline'")
    common = min(t.duration for t in tls)
    if duration is not None:
        common = min(common, float(duration))
    return [t if t.duration == common else t.truncated(common) for t in tls]


def extract_corpus(root: str | Path, lexicon: Lexicon | None = None,
                   vad: VadParams = VadParams()) -> Dataset:
    """Dataset of every session under ``root`` (sorted by manifest path)."""
    manifests = find_manifests(root)
    if not manifests:
        raise InputError(f"{root}: no sessions (no {MANIFEST_NAME} found)")
    lexicon = lexicon or demo_lexicon()
    samples = []
    for m in manifests:
        session, codes = load_session(m, vad)
        try:
            new = extract_session(session, lexicon, codes)
        except (ValueError, FrameDataError, GameLogError) as exc:
            raise InputError(f"{m}: {exc}") from None
        for s in new:
            bad = [n for n, ok in zip(SCHEMA.names, s.features.valid) if not ok]
            if bad:
                log.warning("%s: %s has %d invalid features (%s)", m, s.participant_id, len(bad),
                            ", ".join(bad[:4]) + (" ..." if len(bad) > 4 else ""))
        samples.extend(new)
    return Dataset(tuple(samples))
