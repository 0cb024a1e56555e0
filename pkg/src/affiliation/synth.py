"""Synthetic dyadic sessions with a planted affiliation signal.

Each participant gets a latent affiliation score drawn to match reference
moments (mean 5.31, SD 1.28, clipped to [1, 7]). For every affected channel
the knobs of the generating process (pause length, word-category mix, push
rate, ...) move monotonically with the standardized latent score; unaffected
channels only see noise. The raw artifacts go through the regular extraction
code, so the returned dataset is exactly what the pipeline would compute from
the files written by :func:`write_corpus`.

Planted directions follow the reference rank correlations where those exist:
more conversational turns, shorter pauses, fewer analytic and number words,
more first-person singular and time words, more horizontal pushes, higher
trust propensity and conscientiousness. The remaining directions (joy and
engagement up, blink rate down, shared score up) are arbitrary choices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chronemics import SegmentTimeline, render_timeline, write_wav
from .core import CATEGORIES, Dataset
from .lexicon import demo_lexicon
from .telemetry import GameEvent, GameLog, write_game_log
from .traits import QuestionnaireResponse, write_questionnaires
from .visual import EMOTIONS, FrameSeries, write_frames

AFFILIATION_MEAN = 5.31
AFFILIATION_SD = 1.28
# latent normal calibrated (by simulation) so that the observed 11-item mean,
# after item noise, rounding and clipping, has mean 5.31 and SD 1.28
_LATENT_LOC = 5.48475415
_LATENT_SCALE = 1.53031978
_ITEM_NOISE = 0.6
SAMPLE_RATE = 8000
# timeline grid = one VAD window at 8 kHz, so rendered audio segments back exactly
_GRID = 400 / SAMPLE_RATE

_WORD_POOLS = {
    "analytic": "the a an of in on at to for with by from this that these those".split(),
    "i": "i i'm i've i'll me my mine myself".split(),
    "we": "we we're we've we'll us our ours let's".split(),
    "you": "you you're you've your yours yourself".split(),
    "number": "one two three four five six seven eight nine ten first second third half twice".split(),
    "posemo": "happy good nice great love fun cool awesome yay thanks perfect".split(),
    "negemo": "bad sad hate angry annoying ugh sorry damn worse worst stupid".split(),
    "social": "they he she friend partner team talk help together".split(),
    "motion": "go going went move moving push walk run come coming turn pick grab".split(),
    "space": "left right up down top bottom above below here there corner middle side around".split(),
    "time": "now then when soon time minute quick hurry fast slow wait again already before after".split(),
    "filler": "okay yeah so um uh like just is it be do can get see look maybe think know".split(),
}
_BASE_MIX = {
    "analytic": 0.16, "i": 0.05, "we": 0.03, "you": 0.04, "number": 0.04, "posemo": 0.04,
    "negemo": 0.015, "social": 0.03, "motion": 0.06, "space": 0.08, "time": 0.05, "filler": 0.405,
}
# signed log-rate effects per unit latent; only used when the channel is affected
_WORD_EFFECTS = {"analytic": -0.45, "number": -0.6, "i": 0.45, "time": 0.45}


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    Args:
        n_dyads: Number of dyads (two participants each).
        signal_strength: Weight in [0, 1] of the latent score in the process
            knobs of affected channels; 0 gives a null corpus.
        noise_sd: SD of the per-participant noise added to every knob.
        seed: Master seed; each dyad gets its own stream.
        affected_channels: Feature categories that carry the signal.
        duration: Session length in seconds.
        fps: Frame rate of the face-analysis stream.
        within_dyad_corr: Correlation of the two partners' latent scores.
        missing_rate: Probability per participant of a face-tracking dropout
            that invalidates the facial or blink features.
    """

    n_dyads: int = 23
    signal_strength: float = 0.5
    noise_sd: float = 0.5
    seed: int = 0
    affected_channels: tuple[str, ...] = ("chronemics", "comm_content")
    duration: float = 360.0
    fps: float = 10.0
    within_dyad_corr: float = 0.4
    missing_rate: float = 0.1

    def __post_init__(self):
        if self.n_dyads < 3:
            raise ValueError("need at least 3 dyads")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValueError("signal_strength must lie in [0, 1]")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        object.__setattr__(self, "affected_channels", tuple(self.affected_channels))
        unknown = set(self.affected_channels) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown channels {sorted(unknown)}")
        if self.duration < 60 or round(self.duration / _GRID) * _GRID != self.duration:
            raise ValueError("duration must be >= 60 s and a multiple of 50 ms")
        if not 0.0 <= self.within_dyad_corr < 1.0:
            raise ValueError("within_dyad_corr must lie in [0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "affected_channels" in d:
            d["affected_channels"] = tuple(d["affected_channels"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "n_dyads": self.n_dyads, "signal_strength": self.signal_strength,
            "noise_sd": self.noise_sd, "seed": self.seed,
            "affected_channels": list(self.affected_channels), "duration": self.duration,
            "fps": self.fps, "within_dyad_corr": self.within_dyad_corr,
            "missing_rate": self.missing_rate,
        }


@dataclass(frozen=True)
class ParticipantArtifacts:
    participant_id: str
    timeline: SegmentTimeline
    transcript: str
    frames: FrameSeries
    game_log: GameLog
    questionnaire: QuestionnaireResponse  # carries partner_gender
    affiliation_items: tuple[float, ...]
    latent: float = field(default=float("nan"))


@dataclass(frozen=True)
class DyadSession:
    dyad_id: str
    duration: float
    participants: tuple[ParticipantArtifacts, ParticipantArtifacts]


class _Knobs:
    """Per-participant process knobs: signal * z + noise, or noise alone."""

    def __init__(self, z: float, cfg: SynthConfig, rng: np.random.Generator):
        self.z, self.cfg, self.rng = z, cfg, rng

    def __call__(self, channel: str) -> float:
        s = self.cfg.signal_strength if channel in self.cfg.affected_channels else 0.0
        return s * self.z + self.cfg.noise_sd * float(self.rng.standard_normal())


def _timeline(rng, duration: float, mean_speech: float, mean_pause: float, first: float) -> SegmentTimeline:
    """Alternating renewal process on the 50 ms grid, speech >= 0.25 s, pauses >= 0.35 s."""
    n_total = int(round(duration / _GRID))
    k = max(0, int(round(first / _GRID)))
    speech = []
    while k < n_total:
        ls = max(5, int(round(rng.gamma(2.0, mean_speech / 2.0) / _GRID)))
        end = min(k + ls, n_total)
        if end - k >= 5:
            speech.append((k * _GRID, end * _GRID))
        k = end + max(7, int(round(rng.gamma(1.5, mean_pause / 1.5) / _GRID)))
    return SegmentTimeline.from_speech(speech, duration)


def _transcript(rng, n_words: int, mix: dict[str, float]) -> str:
    names = list(mix)
    p = np.array([mix[c] for c in names])
    p /= p.sum()
    cats = rng.choice(len(names), size=n_words, p=p)
    words = [_WORD_POOLS[names[c]][rng.integers(len(_WORD_POOLS[names[c]]))] for c in cats]
    lines, i = [], 0
    while i < len(words):
        n = int(rng.integers(3, 12))
        sent = " ".join(words[i:i + n])
        lines.append(sent[:1].upper() + sent[1:] + ("?" if rng.random() < 0.2 else "."))
        i += n
    return "\n".join(lines) + ("\n" if lines else "")


def _frames(rng, cfg: SynthConfig, knob: _Knobs, dropout: str | None) -> FrameSeries:
    n = int(round(cfg.duration * cfg.fps))
    t = np.arange(n) / cfg.fps
    detected = np.ones(n, dtype=bool)
    # isolated single-frame tracking losses
    detected[rng.choice(n, size=int(rng.integers(0, 8)), replace=False)] = False
    if dropout == "face":
        # lose the face for a quarter of the session: facial and blink features invalid
        a = int(rng.integers(0, n // 2))
        detected[a:a + n // 4] = False
    elif dropout == "blink":
        # scattered losses over 12% of frames: facial valid, blink invalid
        lost = rng.choice(n, size=int(0.12 * n), replace=False)
        detected[lost] = False

    emo = np.empty((n, len(EMOTIONS)))
    face_knob = knob("facial_expression")
    for j, name in enumerate(EMOTIONS):
        level = {"joy": 12.0, "engagement": 25.0}.get(name, 5.0)
        shift = face_knob if name in ("joy", "engagement") else knob("noise")
        base = level * np.exp(0.35 * shift)
        trace = base + rng.normal(0.0, 2.0, n)
        rate = (0.6 if name in ("joy", "engagement") else 0.15) * np.exp(0.5 * shift)
        for start in rng.choice(n, size=rng.poisson(rate * cfg.duration / 60.0), replace=True):
            width = int(rng.integers(5, 30))
            trace[start:start + width] = rng.uniform(55.0, 95.0)
        # detector exports carry two decimals
        emo[:, j] = np.round(np.clip(trace, 0.0, 100.0), 2)
    emo[~detected] = np.nan

    closed = np.zeros(n)
    bpm = 15.0 * np.exp(-0.3 * knob("eye_blink"))
    for start in np.flatnonzero(rng.random(n) < bpm / 60.0 / cfg.fps):
        closed[start:start + int(rng.integers(1, 3))] = 1.0
    closed[~detected] = np.nan
    return FrameSeries(cfg.fps, t, detected, emo, closed)


def _questionnaire(rng, knob: _Knobs, gender: str, partner: str) -> QuestionnaireResponse:
    tipi = np.clip(np.round(rng.normal(4.2, 1.4, 10)), 1, 7).astype(int)
    c_shift = 0.9 * knob("self_report")
    tipi[2] = int(np.clip(round(4.8 + c_shift + rng.normal(0, 0.8)), 1, 7))  # conscientious
    tipi[7] = int(np.clip(round(3.2 - c_shift + rng.normal(0, 0.8)), 1, 7))  # disorganized (R)
    trust = 3.0 + 0.45 * knob("self_report")
    gts = np.clip(np.round(rng.normal(trust, 0.6, 6)), 1, 5).astype(int)
    return QuestionnaireResponse(
        tipi_items=tuple(int(x) for x in tipi),
        gts_items=tuple(int(x) for x in gts),
        gamer_identification=float(np.round(rng.uniform(0, 100), 1)),
        genre_puzzles=bool(rng.random() < 0.5),
        genre_casual=bool(rng.random() < 0.6),
        brainhex_socializer=bool(rng.random() < 0.3),
        age=float(rng.integers(18, 60)),
        gender=gender,
        partner_gender=partner,
    )


def _game_logs(rng, cfg: SynthConfig, knobs: list[_Knobs]) -> list[GameLog]:
    half = cfg.duration / 2.0
    shared = 0.5 * (knobs[0]("performance") + knobs[1]("performance"))
    round_scores = rng.poisson(10.0 * np.exp(0.3 * shared), size=2)
    score_times = [np.sort(rng.uniform(r * half, (r + 1) * half, k)) for r, k in enumerate(round_scores)]
    pushes = []
    for kn in knobs:
        shift = kn("in_game_behaviour")
        n_h = rng.poisson(20.0 * np.exp(0.4 * shift))
        n_v = rng.poisson(15.0 * np.exp(0.2 * kn("noise")))
        pushes.append((n_h, n_v))
    logs = []
    for p in range(2):
        roles = {1: "collector", 2: "pusher"} if p == 0 else {1: "pusher", 2: "collector"}
        events = []
        push_round = 2 if p == 0 else 1
        n_h, n_v = pushes[p]
        push_times = rng.uniform((push_round - 1) * half, push_round * half, n_h + n_v)
        orient = ["horizontal"] * n_h + ["vertical"] * n_v
        for rnd in (1, 2):
            evs = [GameEvent(float(x), "score", rnd, roles[rnd]) for x in score_times[rnd - 1]]
            if rnd == push_round:
                evs += [GameEvent(float(x), "push", rnd, roles[rnd], o) for x, o in zip(push_times, orient)]
            evs.sort(key=lambda e: e.t)
            events += evs
        logs.append(GameLog(tuple(events), roles))
    return logs


def _dyad(cfg: SynthConfig, index: int) -> DyadSession:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    dyad_id = f"d{index + 1:03d}"
    rho = cfg.within_dyad_corr
    shared = rng.standard_normal()
    z = np.sqrt(rho) * shared + np.sqrt(1 - rho) * rng.standard_normal(2)
    latent = np.clip(_LATENT_LOC + _LATENT_SCALE * z, 1.0, 7.0)
    knobs = [_Knobs(float(zi), cfg, rng) for zi in z]
    genders = list(rng.choice(["female", "male"], size=2))

    first = rng.exponential(2.0)
    timelines = []
    for kn in knobs:
        shift = kn("chronemics")
        mean_pause = 4.0 * np.exp(-0.6 * shift)
        mean_speech = 1.8 * np.exp(0.1 * kn("noise"))
        timelines.append(_timeline(rng, cfg.duration, mean_speech, mean_pause, first + rng.exponential(1.0)))

    logs = _game_logs(rng, cfg, knobs)
    parts = []
    for p, (kn, tl) in enumerate(zip(knobs, timelines)):
        pid = f"{dyad_id}{'ab'[p]}"
        talk = sum(s.end - s.start for s in tl.speech)
        words_shift = kn("comm_content")
        mix = {c: w * np.exp(_WORD_EFFECTS.get(c, 0.0) * words_shift + 0.15 * kn("noise"))
               for c, w in _BASE_MIX.items()}
        text = _transcript(rng, int(rng.poisson(2.4 * talk)), mix)
        u = rng.random()
        dropout = "face" if u < cfg.missing_rate / 2 else "blink" if u < cfg.missing_rate else None
        frames = _frames(rng, cfg, kn, dropout)
        q = _questionnaire(rng, kn, genders[p], genders[1 - p])
        items = tuple(float(x) for x in np.clip(np.round(latent[p] + rng.normal(0, _ITEM_NOISE, 11)), 1, 7))
        parts.append(ParticipantArtifacts(pid, tl, text, frames, logs[p], q, items, float(latent[p])))
    return DyadSession(dyad_id, cfg.duration, (parts[0], parts[1]))


def generate(config: SynthConfig) -> tuple[list[DyadSession], Dataset]:
    """Raw sessions plus the dataset extracted from them (continuous labels only)."""
    from .pipeline import extract_session

    sessions = [_dyad(config, i) for i in range(config.n_dyads)]
    lex = demo_lexicon()
    samples = [s for sess in sessions for s in extract_session(sess, lex)]
    return sessions, Dataset(tuple(samples))


def write_corpus(sessions: list[DyadSession], root: str | Path, audio: str = "wav") -> list[Path]:
    """Write sessions in the manifest layout ``root/<dyad_id>/session.json``.

    ``audio='wav'`` renders each timeline as a 16-bit 8 kHz WAV file;
    ``audio='timeline'`` writes the segment CSV instead (much smaller).
    """
    if audio not in ("wav", "timeline"):
        raise ValueError("audio must be 'wav' or 'timeline'")
    root = Path(root)
    paths = []
    for sess in sessions:
        d = root / sess.dyad_id
        d.mkdir(parents=True, exist_ok=True)
        entries = []
        for p in sess.participants:
            pid = p.participant_id
            entry = {"participant_id": pid}
            if audio == "wav":
                write_wav(render_timeline(p.timeline, SAMPLE_RATE), d / f"{pid}.wav")
                entry["audio"] = f"{pid}.wav"
                entry["audio_offset"] = 0.0
            else:
                p.timeline.to_csv(d / f"{pid}_timeline.csv")
                entry["timeline"] = f"{pid}_timeline.csv"
            (d / f"{pid}.txt").write_text(p.transcript, encoding="utf-8")
            write_frames(p.frames, d / f"{pid}_frames.csv")
            write_game_log(p.game_log, d / f"{pid}_log.jsonl")
            entry.update(transcript=f"{pid}.txt", frames=f"{pid}_frames.csv",
                         game_log=f"{pid}_log.jsonl", questionnaire="questionnaire.csv")
            entries.append(entry)
        write_questionnaires(
            [(p.participant_id, p.questionnaire, list(p.affiliation_items)) for p in sess.participants],
            d / "questionnaire.csv",
        )
        manifest = {"dyad_id": sess.dyad_id, "duration": sess.duration, "participants": entries}
        path = d / "session.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
