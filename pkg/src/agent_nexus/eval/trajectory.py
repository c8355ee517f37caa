"""Episode trajectory logs: line-delimited event records."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

MODEL_CALL_KINDS = ("planner_call", "navigator_call", "analyst_call")


class TerminationReason(str, Enum):
    SUCCESSFUL = "Successful"
    PREMATURE = "Premature"
    BUDGET_EXCEEDED = "BudgetExceeded"
    DEEMED_IMPOSSIBLE = "DeemedImpossible"
    COLLAPSE = "Collapse"


def classify_termination(verdict: str | None, reward: int) -> TerminationReason:
    """Map the planner's terminal verdict and the judged reward to a reason.

    ``verdict`` is "done", "infeasible", "collapse" or None (the episode was
    cut off by a budget).
    """
    if verdict == "done":
        return TerminationReason.SUCCESSFUL if reward == 1 else TerminationReason.PREMATURE
    if verdict == "infeasible":
        return TerminationReason.DEEMED_IMPOSSIBLE
    if verdict == "collapse":
        return TerminationReason.COLLAPSE
    return TerminationReason.BUDGET_EXCEEDED


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    payload: dict
    wall_ms: float = 0.0
    infer_ms: float = 0.0
    tokens_in: int = 0
    tokens_out: int = 0

    def to_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> Event:
        return cls(int(d["seq"]), str(d["kind"]), dict(d.get("payload", {})),
                   float(d.get("wall_ms", 0.0)), float(d.get("infer_ms", 0.0)),
                   int(d.get("tokens_in", 0)), int(d.get("tokens_out", 0)))


@dataclass
class TrajectoryRecord:
    events: list[Event] = field(default_factory=list)

    def add(self, kind: str, payload: dict | None = None, *, wall_ms: float = 0.0,
            infer_ms: float = 0.0, tokens_in: int = 0, tokens_out: int = 0) -> Event:
        if infer_ms > wall_ms:
            wall_ms = infer_ms
        ev = Event(len(self.events), kind, payload or {}, wall_ms, infer_ms, tokens_in, tokens_out)
        self.events.append(ev)
        return ev

    def of_kind(self, *kinds: str) -> list[Event]:
        return [e for e in self.events if e.kind in kinds]

    def _meta(self, kind: str) -> dict:
        for e in self.events:
            if e.kind == kind:
                return e.payload
        return {}

    @property
    def start(self) -> dict:
        return self._meta("episode_start")

    @property
    def end(self) -> dict:
        return self._meta("episode_end")

    @property
    def task_id(self) -> str:
        return self.start.get("task_id", "")

    @property
    def composition_type(self) -> str:
        return self.start.get("composition_type", "")

    @property
    def termination(self) -> TerminationReason | None:
        t = self.end.get("termination")
        return TerminationReason(t) if t else None

    @property
    def reward(self) -> int:
        return int(self.end.get("reward", 0))

    @property
    def verdict(self) -> str | None:
        return self.end.get("verdict")

    @property
    def final_hash(self) -> str:
        return self.end.get("final_hash", "")

    @property
    def env_steps(self) -> list[Event]:
        return self.of_kind("env_step")

    @property
    def model_calls(self) -> list[Event]:
        return self.of_kind(*MODEL_CALL_KINDS)

    def to_jsonl(self) -> str:
        return "".join(e.to_line() + "\n" for e in self.events)

    def record_hash(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> TrajectoryRecord:
        return cls([Event.from_dict(json.loads(ln)) for ln in lines if ln.strip()])

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> TrajectoryRecord:
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


def synthetic_record(task_id: str = "t", *, steps: Iterable[dict[str, Any]] = (),
                     verdict: str | None = "done", reward: int = 0) -> TrajectoryRecord:
    """Small hand-built record for tests and demos.

    Each item of ``steps`` is an env-step payload, e.g.
    ``{"action": "Tap(x)", "foreground": "notes"}``.
    """
    rec = TrajectoryRecord()
    rec.add("episode_start", {"task_id": task_id})
    for payload in steps:
        rec.add("env_step", dict(payload))
    rec.add("episode_end", {"verdict": verdict, "reward": reward,
                            "termination": classify_termination(verdict, reward).value})
    return rec
