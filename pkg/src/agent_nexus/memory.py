"""Append-only process memory shared between the scheduler and executors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

MIN_BUDGET = 256


class BudgetTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class StepLog:
    reasoning: str
    action: str
    reflection: str | None = None

    @property
    def is_claim(self) -> bool:
        """True for the navigator's closing Stop-with-claim, which costs no env step."""
        return self.action.startswith("Stop(completed=")

    def to_dict(self) -> dict:
        return {"reasoning": self.reasoning, "action": self.action, "reflection": self.reflection}


@dataclass(frozen=True)
class ActResult:
    completed: bool
    step_logs: tuple[StepLog, ...] = ()
    note: str = ""

    @property
    def env_steps(self) -> int:
        return sum(not log.is_claim for log in self.step_logs)

    @property
    def last_action(self) -> str:
        acted = [log.action for log in self.step_logs if not log.is_claim]
        return acted[-1] if acted else "none"


@dataclass(frozen=True)
class ThinkResult:
    text: str
    failed: bool = False

    def __post_init__(self):
        if self.failed and not self.text.strip():
            object.__setattr__(self, "text", "analysis failed: empty output")


@dataclass(frozen=True)
class ToolResult:
    status: str


ResultVariant = Union[ActResult, ThinkResult, ToolResult]


def result_to_dict(result: ResultVariant) -> dict:
    if isinstance(result, ActResult):
        return {"type": "act", "completed": result.completed, "note": result.note,
                "step_logs": [log.to_dict() for log in result.step_logs]}
    if isinstance(result, ThinkResult):
        return {"type": "think", "text": result.text, "failed": result.failed}
    return {"type": "tool", "status": result.status}


def result_from_dict(d: dict) -> ResultVariant:
    kind = d["type"]
    if kind == "act":
        return ActResult(bool(d["completed"]), tuple(StepLog(**log) for log in d["step_logs"]),
                         d.get("note", ""))
    if kind == "think":
        return ThinkResult(d["text"], bool(d["failed"]))
    if kind == "tool":
        return ToolResult(d["status"])
    raise ValueError(f"unknown result type {kind!r}")


@dataclass(frozen=True)
class MemoryEntry:
    index: int
    instruction: str
    result: ResultVariant

    def to_dict(self) -> dict:
        return {"index": self.index, "instruction": self.instruction, "result": result_to_dict(self.result)}

    @classmethod
    def from_dict(cls, d: dict) -> MemoryEntry:
        return cls(int(d["index"]), d["instruction"], result_from_dict(d["result"]))


class ProcessMemory:
    """Chronological record of executed subtasks. Entries can only be appended."""

    def __init__(self):
        self._entries: list[MemoryEntry] = []

    def append(self, instruction: str, result: ResultVariant) -> MemoryEntry:
        entry = MemoryEntry(len(self._entries), instruction, result)
        self._entries.append(entry)
        return entry

    @property
    def entries(self) -> tuple[MemoryEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[MemoryEntry]:
        return iter(tuple(self._entries))

    def __getitem__(self, i: int) -> MemoryEntry:
        return self._entries[i]

    def think_texts(self) -> list[str]:
        return [e.result.text for e in self._entries if isinstance(e.result, ThinkResult)]


def append(memory: ProcessMemory, instruction: str, result: ResultVariant) -> MemoryEntry:
    return memory.append(instruction, result)


# --- rendering -------------------------------------------------------------

def _summary(entry: MemoryEntry, redact_think: bool) -> str:
    r = entry.result
    head = f"[{entry.index}] {entry.instruction} → "
    if isinstance(r, ThinkResult):
        text = "" if redact_think else r.text
        return head + ("think (failed): " if r.failed else "think: ") + text
    if isinstance(r, ActResult):
        flag = "true" if r.completed else "false"
        line = head + f"act: completed={flag}, steps={r.env_steps}, last={r.last_action}"
        return line + (f", note={r.note}" if r.note else "")
    return head + f"tool: {r.status}"


def _details(entry: MemoryEntry) -> list[str]:
    if not isinstance(entry.result, ActResult):
        return []
    lines = []
    for log in entry.result.step_logs:
        line = f"    - {log.reasoning} | {log.action}"
        if log.reflection:
            line += f" | reflection: {log.reflection}"
        lines.append(line)
    return lines


def render_context(memory: ProcessMemory, char_budget: int, *, redact_think: bool = False) -> str:
    """Render memory oldest to newest within ``char_budget`` characters.

    Shrinks in stages until it fits: drop act step details, then drop the
    oldest act/tool entries, then the oldest think entries, then hard-cut.
    ``redact_think`` blanks think texts (ablation switch).
    """
    if char_budget < MIN_BUDGET:
        raise BudgetTooSmall(f"char_budget must be >= {MIN_BUDGET}")
    entries = list(memory)
    if not entries:
        return ""
    summaries = {e.index: _summary(e, redact_think) for e in entries}

    def assemble(kept: list[MemoryEntry], detailed: bool, omitted: int) -> str:
        lines = [f"({omitted} earlier entries omitted)"] if omitted else []
        for e in kept:
            lines.append(summaries[e.index])
            if detailed:
                lines.extend(_details(e))
        return "\n".join(lines)

    text = assemble(entries, True, 0)
    if len(text) <= char_budget:
        return text
    kept = entries
    text = assemble(kept, False, 0)
    for think_pass in (False, True):
        while len(text) > char_budget:
            victim = next((e for e in kept if isinstance(e.result, ThinkResult) == think_pass), None)
            if victim is None or len(kept) == 1:
                break
            kept = [e for e in kept if e is not victim]
            text = assemble(kept, False, len(entries) - len(kept))
    return text[:char_budget]
