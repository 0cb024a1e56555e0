"""Performance and in-game behaviour features from the game event log."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

ROLES = ("collector", "pusher")
ORIENTATIONS = ("horizontal", "vertical")


class GameLogError(ValueError):
    pass


@dataclass(frozen=True)
class GameEvent:
    t: float
    kind: str  # "score" | "push"
    round: int  # 1 | 2
    role: str  # role of the participant during this round
    orientation: str | None = None


@dataclass(frozen=True)
class GameLog:
    """Events of one participant's session, both rounds.

    ``roles`` gives the participant's role per round explicitly, so a round
    without any events still has a role.
    """

    events: tuple[GameEvent, ...]
    roles: dict[int, str] | None = None

    def __post_init__(self):
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        roles = dict(self.roles or {})
        last_round = 0
        for i, e in enumerate(events):
            if e.kind not in ("score", "push"):
                raise GameLogError(f"event {i}: unknown kind {e.kind!r}")
            if e.round not in (1, 2):
                raise GameLogError(f"event {i}: round must be 1 or 2, got {e.round!r}")
            if e.round < last_round:
                raise GameLogError(f"event {i}: rounds out of order")
            last_round = e.round
            if e.role not in ROLES:
                raise GameLogError(f"event {i}: unknown role {e.role!r}")
            if roles.setdefault(e.round, e.role) != e.role:
                raise GameLogError(f"event {i}: role changes within round {e.round}")
        if len(roles) == 2 and roles[1] == roles[2]:
            raise GameLogError("roles must swap between rounds")
        if len(roles) == 1:
            # infer the other round's role from the swap rule
            (r, role), = roles.items()
            roles[3 - r] = ROLES[1 - ROLES.index(role)]
        object.__setattr__(self, "roles", roles)


def performance_features(log: GameLog) -> dict[str, float]:
    if set(log.roles) != {1, 2}:
        raise GameLogError("every round needs a role assignment")
    r = {1: 0, 2: 0}
    for e in log.events:
        if e.kind == "score":
            r[e.round] += 1
    by_role = {log.roles[k]: r[k] for k in (1, 2)}
    diff_rounds = r[2] - r[1]
    diff_role = by_role["collector"] - by_role["pusher"]
    overall = r[1] + r[2]
    return {
        "ScoreRound1": float(r[1]),
        "ScoreRound2": float(r[2]),
        "ScoreCollector": float(by_role["collector"]),
        "ScorePusher": float(by_role["pusher"]),
        "ScoreDiffRounds": float(diff_rounds),
        "ScoreAbsDiffRounds": float(abs(diff_rounds)),
        "ScoreDiffRole": float(diff_role),
        "ScoreAbsDiffRole": float(abs(diff_role)),
        "ScoreOverall": float(overall),
        "ScoreMean": overall / 2.0,
        "ScoreMin": float(min(r.values())),
        "ScoreMax": float(max(r.values())),
    }


def behaviour_features(log: GameLog) -> dict[str, float]:
    counts = dict.fromkeys(ORIENTATIONS, 0)
    for i, e in enumerate(log.events):
        if e.kind != "push":
            continue
        if e.orientation not in ORIENTATIONS:
            raise GameLogError(f"event {i}: push without a valid orientation")
        counts[e.orientation] += 1
    return {
        "CountVerticalPushes": float(counts["vertical"]),
        "CountHorizontalPushes": float(counts["horizontal"]),
    }


_FIELDS = {"t", "kind", "round", "role", "orientation"}


def read_game_log(path: str | Path) -> GameLog:
    """Parse a JSON-lines event log; schema violations name the line."""
    events = []
    roles: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GameLogError(f"{where}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise GameLogError(f"{where}: expected an object")
            if obj.get("kind") == "round":
                # round header: {"kind": "round", "round": 1, "role": "collector"}
                roles[int(obj["round"])] = obj["role"]
                continue
            extra = set(obj) - _FIELDS
            missing = {"t", "kind", "round", "role"} - set(obj)
            if extra or missing:
                raise GameLogError(f"{where}: unexpected fields {sorted(extra)} / missing {sorted(missing)}")
            if not isinstance(obj["t"], (int, float)) or not isinstance(obj["round"], int):
                raise GameLogError(f"{where}: t must be a number and round an integer")
            if obj["kind"] == "push" and obj.get("orientation") not in ORIENTATIONS:
                raise GameLogError(f"{where}: push event needs orientation horizontal|vertical")
            events.append(
                GameEvent(float(obj["t"]), obj["kind"], obj["round"], obj["role"], obj.get("orientation"))
            )
    try:
        return GameLog(tuple(events), roles or None)
    except GameLogError as exc:
        raise GameLogError(f"{path}: {exc}") from None


def write_game_log(log: GameLog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rnd in (1, 2):
            fh.write(json.dumps({"kind": "round", "round": rnd, "role": log.roles[rnd]}) + "\n")
        for e in log.events:
            rec = {"t": round(e.t, 3), "kind": e.kind, "round": e.round, "role": e.role}
            if e.orientation is not None:
                rec["orientation"] = e.orientation
            fh.write(json.dumps(rec) + "\n")
