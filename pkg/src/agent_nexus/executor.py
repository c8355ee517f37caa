"""Execution module: runs act, think and tool subtasks and returns result variants."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol

from .backends import Backend, BackendReply
from .env.state import Action, Effect, Home, Observation, Stop, parse_action
from .memory import ActResult, StepLog, ThinkResult, ToolResult

DEFAULT_HISTORY_WINDOW = 5

# (kind, request blocks, reply) -> None; lets the caller log model calls
CallLog = Callable[[str, Mapping[str, str], BackendReply, str], None]


class NavigatorMalformed(ValueError):
    pass


class AnalystMalformed(ValueError):
    pass


class UnknownTool(KeyError):
    pass


class EnvHandle(Protocol):
    def observe(self) -> Observation: ...

    def step(self, action: Action) -> Effect: ...


class StepBudgetExceeded(Exception):
    """Raised by an episode's env handle when a step would exceed the episode budget.

    Executors attach what they had done so far as ``partial`` and re-raise.
    """

    def __init__(self, attempted: str):
        super().__init__(f"episode step budget exceeded at {attempted}")
        self.attempted = attempted
        self.partial = None


@dataclass(frozen=True)
class Claim:
    completed: bool
    note: str

    def __str__(self) -> str:
        flag = "true" if self.completed else "false"
        return f"Stop(completed={flag}, {json.dumps(self.note, ensure_ascii=False)})"


@dataclass(frozen=True)
class NavigatorDecision:
    move: Action | Claim
    reasoning: str = ""
    reflection: str | None = None


_CLAIM = re.compile(r'^Stop\(\s*completed\s*=\s*(true|false)\s*(?:,\s*("(?:[^"\\]|\\.)*"))?\s*\)$', re.I)


def parse_navigator_reply(text: str) -> NavigatorDecision:
    """Read ``REASONING:``/``REFLECTION:`` lines and exactly one ``ACTION:`` line."""
    reasoning, reflection, actions = "", None, []
    for raw in text.splitlines():
        label, sep, rest = raw.strip().partition(":")
        if not sep:
            continue
        key, rest = label.strip().upper(), rest.strip()
        if key == "REASONING":
            reasoning = rest
        elif key == "REFLECTION":
            reflection = rest
        elif key == "ACTION":
            actions.append(rest)
    if len(actions) != 1:
        raise NavigatorMalformed(f"expected one ACTION line, got {len(actions)}")
    spec = actions[0]
    m = _CLAIM.match(spec)
    if m:
        note = json.loads(m.group(2)) if m.group(2) else ""
        return NavigatorDecision(Claim(m.group(1).lower() == "true", note), reasoning, reflection)
    try:
        action = parse_action(spec)
    except ValueError as exc:
        raise NavigatorMalformed(str(exc)) from exc
    if isinstance(action, Stop):
        raise NavigatorMalformed("navigator stops must carry completed=<true|false>")
    return NavigatorDecision(action, reasoning, reflection)


def render_history(logs: list[StepLog], window: int) -> str:
    """Last ``window`` acted steps of the current subtask, numbered from 0."""
    acted = [(i, log) for i, log in enumerate(log for log in logs if not log.is_claim)]
    return "\n".join(f"#{i} {log.action} | {log.reasoning}" for i, log in acted[-window:] if window > 0)


def exec_act(env: EnvHandle, instruction: str, max_steps: int, navigator: Backend, *,
             history_window: int = DEFAULT_HISTORY_WINDOW, log: CallLog | None = None) -> tuple[ActResult, int]:
    """Drive the navigator for at most ``max_steps`` env steps.

    The navigator sees only this subtask's instruction, the current screen and
    its own recent steps. Its closing claim is recorded as-is; whether the
    subtask really succeeded is for the judge to decide.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    logs: list[StepLog] = []
    used = 0
    try:
        while used < max_steps:
            blocks = {"instruction": instruction, "observation": env.observe().text,
                      "history": render_history(logs, history_window)}
            try:
                reply = navigator.complete(blocks)
            except Exception as exc:  # backend faults end the subtask, never the episode
                return ActResult(False, tuple(logs), f"navigator error: {exc}"), used
            if log:
                log("navigator_call", blocks, reply, navigator.identity)
            try:
                decision = parse_navigator_reply(reply.text)
            except NavigatorMalformed as exc:
                return ActResult(False, tuple(logs), f"malformed navigator output: {exc}"), used
            if isinstance(decision.move, Claim):
                logs.append(StepLog(decision.reasoning, str(decision.move), decision.reflection))
                return ActResult(decision.move.completed, tuple(logs), decision.move.note), used
            env.step(decision.move)
            used += 1
            logs.append(StepLog(decision.reasoning, str(decision.move), decision.reflection))
    except StepBudgetExceeded as exc:
        exc.partial = ActResult(False, tuple(logs), "episode step budget exceeded")
        raise
    return ActResult(False, tuple(logs), "subtask budget exhausted"), used


def exec_think(obs: Observation, instruction: str, memory_text: str, analyst: Backend, *,
               log: CallLog | None = None) -> ThinkResult:
    """Ask the analyst to reason over the current screen. Never touches the env."""
    blocks = {"instruction": instruction, "observation": obs.text, "memory": memory_text}
    try:
        reply = analyst.complete(blocks)
        if log:
            log("analyst_call", blocks, reply, analyst.identity)
        if not isinstance(reply.text, str):
            raise AnalystMalformed("analyst reply is not text")
    except Exception as exc:
        return ThinkResult(f"analyst error: {exc}", failed=True)
    text = reply.text.strip()
    if not text:
        return ThinkResult("", failed=True)
    if text.upper().startswith("FAILED:"):
        return ThinkResult(text, failed=True)
    return ThinkResult(reply.text)


ToolFn = Callable[[EnvHandle], str]


def _home(env: EnvHandle) -> str:
    env.step(Home())
    return "ok: foreground=home"


DEFAULT_TOOLS: dict[str, ToolFn] = {"HOME": _home}


def exec_tool(env: EnvHandle, tool_name: str, registry: Mapping[str, ToolFn] | None = None) -> ToolResult:
    registry = DEFAULT_TOOLS if registry is None else registry
    name = tool_name.strip().split()[0].upper() if tool_name.strip() else ""
    if name not in registry:
        raise UnknownTool(tool_name)
    try:
        return ToolResult(registry[name](env))
    except StepBudgetExceeded as exc:
        exc.partial = ToolResult("episode step budget exceeded")
        raise
