"""Heuristic failure-pattern detectors over trajectory records.

Three patterns are recognised:

* RepeatedIdenticalAction: the same action repeated back to back, e.g. a
  settings toggle tapped on and off over and over after the task is done.
* AppOscillation: the foreground app ping-pongs between two apps without any
  goal checkpoint becoming satisfied along the way.
* ZeroProgressStop: the planner declares the task done without a single
  environment step.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .trajectory import Event, TrajectoryRecord


class SignatureKind(str, Enum):
    REPEATED_IDENTICAL_ACTION = "RepeatedIdenticalAction"
    APP_OSCILLATION = "AppOscillation"
    ZERO_PROGRESS_STOP = "ZeroProgressStop"


@dataclass(frozen=True)
class FailureSignature:
    kind: SignatureKind
    start: int  # event seq, inclusive
    end: int

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "start": self.start, "end": self.end}


def _repeats(steps: list[Event], threshold: int) -> list[FailureSignature]:
    out = []
    i = 0
    while i < len(steps):
        j = i
        while j + 1 < len(steps) and steps[j + 1].payload.get("action") == steps[i].payload.get("action"):
            j += 1
        if j - i + 1 >= threshold:
            out.append(FailureSignature(SignatureKind.REPEATED_IDENTICAL_ACTION, steps[i].seq, steps[j].seq))
        i = j + 1
    return out


def _oscillations(steps: list[Event], min_switches: int) -> list[FailureSignature]:
    # split at steps that satisfied a new checkpoint; progress breaks a ping-pong
    segments: list[list[Event]] = [[]]
    for ev in steps:
        segments[-1].append(ev)
        if ev.payload.get("newly_satisfied"):
            segments.append([])
    out = []
    for seg in segments:
        visits: list[tuple[str, int, int]] = []
        for ev in seg:
            app = ev.payload.get("foreground")
            if not app or app == "home":
                continue
            if visits and visits[-1][0] == app:
                visits[-1] = (app, visits[-1][1], ev.seq)
            else:
                visits.append((app, ev.seq, ev.seq))
        start = 0
        for k in range(1, len(visits) + 1):
            alternating = k < len(visits) and (k < 2 or visits[k][0] == visits[k - 2][0])
            if not alternating:
                if k - 1 - start >= min_switches:
                    out.append(FailureSignature(SignatureKind.APP_OSCILLATION, visits[start][1], visits[k - 1][2]))
                start = k - 1
    return out


def scan_signatures(record: TrajectoryRecord, *, repeat_threshold: int = 4,
                    oscillation_switches: int = 4) -> list[FailureSignature]:
    """Pure function of the record; signatures are sorted by start."""
    steps = record.env_steps
    found = _repeats(steps, repeat_threshold) + _oscillations(steps, oscillation_switches)
    if record.verdict == "done" and not steps:
        last = record.events[-1].seq if record.events else 0
        found.append(FailureSignature(SignatureKind.ZERO_PROGRESS_STOP, 0, last))
    return sorted(found, key=lambda s: (s.start, s.kind.value))
