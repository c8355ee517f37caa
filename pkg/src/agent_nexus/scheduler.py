"""Scheduling module: plan, dispatch the plan head, record memory, re-plan."""

from __future__ import annotations

import re
import time
import zlib
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Mapping

from .backends import Backend, BackendReply
from .env.reward import Goal, ProgressTracker
from .env.state import Action, Device, Effect, EnvState, Observation, observe, parse_action, step
from .eval.trajectory import TrajectoryRecord, classify_termination
from .executor import (
    DEFAULT_HISTORY_WINDOW, DEFAULT_TOOLS, StepBudgetExceeded, ToolFn, UnknownTool, exec_act,
    exec_think, exec_tool,
)
from .memory import ActResult, ProcessMemory, ToolResult, render_context
from .task_model import CompositionalTask


class SubtaskKind(str, Enum):
    ACT = "act"
    THINK = "think"
    TOOL = "tool"


class Terminal(str, Enum):
    DONE = "done"
    INFEASIBLE = "infeasible"


class MalformedPlan(ValueError):
    def __init__(self, message: str, line: str = ""):
        super().__init__(message)
        self.line = line


class PlannerCollapse(RuntimeError):
    pass


_DANGLING = re.compile(r"\b(the result above|the previous (result|answer|output)|as above|that value)\b", re.I)


@dataclass(frozen=True)
class Subtask:
    id: int
    kind: SubtaskKind
    instruction: str

    def lint(self) -> list[str]:
        if _DANGLING.search(self.instruction):
            return [f"subtask {self.id} refers to earlier output instead of stating it"]
        return []

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind.value, "instruction": self.instruction}


@dataclass(frozen=True)
class Plan:
    subtasks: tuple[Subtask, ...] = ()
    terminal: Terminal | None = None

    def __post_init__(self):
        if self.terminal is None and not self.subtasks:
            raise ValueError("a non-terminal plan needs at least one subtask")
        ids = [s.id for s in self.subtasks]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate subtask ids in plan")

    def to_dict(self) -> dict:
        return {"terminal": self.terminal.value if self.terminal else None,
                "subtasks": [s.to_dict() for s in self.subtasks]}


_PLAN_LINE = re.compile(r"^(\d+)\s*\.\s*\[\s*(act|think|tool)\s*\]\s*(\S.*)$", re.I)


def parse_plan(text: str) -> Plan:
    """Parse ``N. [ACT|THINK|TOOL] instruction`` lines, or a lone DONE / INFEASIBLE."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedPlan("empty plan", "")
    if len(lines) == 1 and lines[0].upper() in ("DONE", "INFEASIBLE"):
        return Plan((), Terminal(lines[0].lower()))
    subtasks = []
    last = 0
    for ln in lines:
        m = _PLAN_LINE.match(ln)
        if not m:
            raise MalformedPlan(f"unrecognised plan line: {ln!r}", ln)
        n = int(m.group(1))
        if (not subtasks and n != 1) or n <= last:
            raise MalformedPlan(f"subtask numbers must rise strictly from 1: {ln!r}", ln)
        last = n
        subtasks.append(Subtask(n, SubtaskKind(m.group(2).lower()), m.group(3).strip()))
    return Plan(tuple(subtasks))


@dataclass
class SchedulerConfig:
    max_global_subtasks: int = 20
    per_subtask_step_budget: int = 15
    episode_step_budget: int | None = None  # None: the goal horizon
    malformed_retry_limit: int = 1
    history_window: int = DEFAULT_HISTORY_WINDOW
    memory_char_budget: int = 4000
    redact_think: bool = False

    def __post_init__(self):
        for name in ("max_global_subtasks", "per_subtask_step_budget", "history_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.episode_step_budget is not None and self.episode_step_budget < 1:
            raise ValueError("episode_step_budget must be positive")
        if self.malformed_retry_limit < 0:
            raise ValueError("malformed_retry_limit must be >= 0")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SchedulerConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scheduler settings: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Backends:
    planner: Backend
    navigator: Backend
    analyst: Backend

    def identities(self) -> dict[str, str]:
        return {"planner": self.planner.identity, "navigator": self.navigator.identity,
                "analyst": self.analyst.identity}


def plan(backend: Backend, obs: Observation, goal: Goal, memory: ProcessMemory,
         config: SchedulerConfig, *, log=None) -> Plan:
    """One scheduling decision, retrying malformed output with the parse error attached."""
    blocks = {"goal": goal.instruction, "observation": obs.text,
              "memory": render_context(memory, config.memory_char_budget, redact_think=config.redact_think)}
    error = None
    for attempt in range(config.malformed_retry_limit + 1):
        request = dict(blocks)
        if error is not None:
            request["error"] = f"Your previous plan could not be parsed: {error}. Use `N. [ACT|THINK|TOOL] <instruction>` lines or DONE / INFEASIBLE."
        try:
            reply = backend.complete(request)
        except Exception as exc:
            raise PlannerCollapse(f"planner backend failed: {exc}") from exc
        if log:
            log("planner_call", request, reply, backend.identity, attempt=attempt)
        try:
            return parse_plan(reply.text)
        except MalformedPlan as exc:
            error = str(exc)
    raise PlannerCollapse(f"malformed plan after {config.malformed_retry_limit + 1} attempts: {error}")


# --- episode runner --------------------------------------------------------

class _Recorder:
    """Stamps events onto a trajectory. Virtual timing makes wall time equal
    reported inference time so scripted runs are byte-reproducible."""

    def __init__(self, record: TrajectoryRecord, measured: bool):
        self.record = record
        self.measured = measured
        self._t = time.perf_counter()

    def _wall(self, infer_ms: float) -> float:
        if not self.measured:
            return infer_ms
        now = time.perf_counter()
        wall = (now - self._t) * 1000
        self._t = now
        return round(wall, 3)

    def event(self, kind: str, payload: dict) -> None:
        self.record.add(kind, payload, wall_ms=self._wall(0.0))

    def call(self, kind: str, blocks: Mapping[str, str], reply: BackendReply, identity: str, **extra) -> None:
        self.record.add(kind, {"backend": identity, "request": dict(blocks), "reply": reply.text, **extra},
                        wall_ms=self._wall(reply.infer_ms), infer_ms=reply.infer_ms,
                        tokens_in=reply.tokens_in, tokens_out=reply.tokens_out)


class EpisodeEnv:
    """Env handle owned by one episode: enforces the step budget and logs steps."""

    def __init__(self, state: EnvState, budget: int, tracker: ProgressTracker, rec: _Recorder):
        self.state = state
        self.budget = budget
        self.used = 0
        self.tracker = tracker
        self.rec = rec
        tracker.update(state)

    def observe(self) -> Observation:
        return observe(self.state)

    def step(self, action: Action) -> Effect:
        if self.used >= self.budget:
            self.rec.event("budget_exceeded", {"attempted": str(action), "budget": self.budget})
            raise StepBudgetExceeded(str(action))
        self.state, effect = step(self.state, action)
        self.used += 1
        newly = self.tracker.update(self.state)
        self.rec.event("env_step", {
            "step": self.state.step_count, "action": str(action), "effect": str(effect),
            "noop": effect.noop, "foreground": self.state.foreground,
            "newly_satisfied": newly, "state_hash": self.state.state_hash(),
        })
        return effect


def episode_seed(master_seed: int, task_id: str) -> int:
    return zlib.crc32(f"{master_seed}:{task_id}".encode())


def run_episode(task: CompositionalTask, device: Device, snapshot_id: str, backends: Backends,
                config: SchedulerConfig | None = None, *, seed: int = 0, measured_timing: bool = False,
                tools: Mapping[str, ToolFn] | None = None) -> TrajectoryRecord:
    """Run one compositional task to termination. Failures become termination reasons."""
    config = config or SchedulerConfig()
    tools = DEFAULT_TOOLS if tools is None else tools
    record = TrajectoryRecord()
    rec = _Recorder(record, measured_timing)
    state = device.reset(snapshot_id)
    state.rng_seed = episode_seed(seed, task.id)
    goal = Goal.from_task(task, horizon=config.episode_step_budget)
    rec.event("episode_start", {
        "task_id": task.id, "composition_type": task.composition_type.value,
        "instruction": task.instruction, "snapshot_id": snapshot_id, "seed": seed,
        "initial_state": state.to_dict(), "initial_hash": state.state_hash(),
        "episode_step_budget": goal.horizon, "config": asdict(config),
        "backends": backends.identities(),
    })
    tracker = ProgressTracker(goal)
    env = EpisodeEnv(state, goal.horizon, tracker, rec)
    memory = ProcessMemory()
    verdict: str | None = None
    planner_calls = 0
    while True:
        obs = env.observe()
        planner_calls += 1
        try:
            current = plan(backends.planner, obs, goal, memory, config, log=rec.call)
        except PlannerCollapse as exc:
            rec.event("collapse", {"error": str(exc)})
            verdict = "collapse"
            break
        rec.event("plan", current.to_dict())
        if current.terminal is not None:
            verdict = current.terminal.value
            break
        if len(memory) >= config.max_global_subtasks:
            rec.event("subtask_budget_exceeded", {"max_global_subtasks": config.max_global_subtasks})
            break
        head = current.subtasks[0]
        rec.event("dispatch", {**head.to_dict(), "global_index": len(memory), "lint": head.lint()})
        try:
            result = _dispatch(head, env, memory, backends, config, tools, rec)
        except StepBudgetExceeded as exc:
            entry = memory.append(head.instruction, exc.partial or ActResult(False, (), str(exc)))
            rec.event("memory_append", entry.to_dict())
            break
        entry = memory.append(head.instruction, result)
        rec.event("memory_append", entry.to_dict())

    final = env.state
    reward_value = tracker.reward(final)
    termination = classify_termination(verdict, reward_value)
    rec.event("episode_end", {
        "verdict": verdict, "reward": reward_value, "termination": termination.value,
        "final_hash": final.state_hash(), "step_count": final.step_count, "env_steps": env.used,
        "completion_order": list(tracker.order), "memory_len": len(memory),
        "planner_calls": planner_calls,
    })
    return record


def _dispatch(head: Subtask, env: EpisodeEnv, memory: ProcessMemory, backends: Backends,
              config: SchedulerConfig, tools: Mapping[str, ToolFn], rec: _Recorder):
    if head.kind is SubtaskKind.ACT:
        result, _ = exec_act(env, head.instruction, config.per_subtask_step_budget, backends.navigator,
                             history_window=config.history_window, log=rec.call)
        return result
    if head.kind is SubtaskKind.THINK:
        memory_text = render_context(memory, config.memory_char_budget, redact_think=config.redact_think)
        return exec_think(env.observe(), head.instruction, memory_text, backends.analyst, log=rec.call)
    try:
        return exec_tool(env, head.instruction, tools)
    except UnknownTool:
        return ToolResult(f"error: unknown tool {head.instruction!r}")


def replay(record: TrajectoryRecord, device: Device) -> str:
    """Re-apply the logged env actions from the logged initial state; returns the final hash."""
    state = EnvState.from_dict(record.start["initial_state"], device.apps)
    for ev in record.env_steps:
        state, _ = step(state, parse_action(ev.payload["action"]))
    return state.state_hash()
