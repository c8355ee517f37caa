"""Goal-conditioned reward: checkpoints over app stores combined by task logic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

from ..eval.metrics import step_budget
from ..task_model import Checkpoint, CompositionalTask, LogicExpr, evaluate_logic, logic_leaves
from .apps import SYSTEM_SCHEMA, SchemaMismatch
from .state import SYSTEM, EnvState


@dataclass(frozen=True)
class Goal:
    instruction: str
    checkpoints: tuple[Checkpoint, ...]
    logic: LogicExpr
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    @classmethod
    def from_task(cls, task: CompositionalTask, horizon: int | None = None) -> Goal:
        return cls(task.instruction, task.checkpoints, task.logic,
                   horizon if horizon is not None else step_budget(task.optimal_steps))

    @property
    def leaves(self) -> list[str]:
        return sorted(set(logic_leaves(self.logic)))


def _number(v: Any) -> float | None:
    if isinstance(v, bool) or v is None:
        return None
    try:
        x = float(v)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def values_equal(actual: Any, expected: Any) -> bool:
    if isinstance(expected, bool) or isinstance(actual, bool):
        return isinstance(actual, bool) and isinstance(expected, bool) and actual == expected
    a, e = _number(actual), _number(expected)
    if a is not None and e is not None:
        return abs(a - e) <= 1e-9 * max(1.0, abs(e))
    return actual == expected


def checkpoint_holds(state: EnvState, cp: Checkpoint) -> bool:
    if cp.app == SYSTEM:
        schema = SYSTEM_SCHEMA
    elif cp.app in state.apps:
        schema = state.apps[cp.app].schema
    else:
        raise SchemaMismatch(f"checkpoint app {cp.app!r} is not registered")
    values = schema.resolve(state.stores[cp.app], cp.predicate.path)
    op, expected = cp.predicate.op, cp.predicate.expected
    if op == "eq":
        return any(values_equal(v, expected) for v in values)
    if op == "contains":
        return any(isinstance(v, str) and str(expected) in v for v in values)
    if op == "count_eq":
        return len(values) == int(expected)
    if op == "ge":
        bound = _number(expected)
        return any((x := _number(v)) is not None and x >= bound for v in values)
    raise ValueError(f"unknown operator {op!r}")


def satisfied_leaves(state: EnvState, goal: Goal) -> set[str]:
    """Leaves with at least one checkpoint, all of which hold."""
    by_leaf: dict[str, list[Checkpoint]] = {}
    for cp in goal.checkpoints:
        by_leaf.setdefault(cp.subtask, []).append(cp)
    return {leaf for leaf in goal.leaves
            if by_leaf.get(leaf) and all(checkpoint_holds(state, cp) for cp in by_leaf[leaf])}


def reward(state: EnvState, goal: Goal, completion_order: Sequence[str] | None = None) -> int:
    """1 iff the goal logic holds over the satisfied leaves, else 0.

    ``completion_order`` gives the order in which leaves became satisfied
    (see ``ProgressTracker``); without it leaves are taken in declared order,
    so Sequential nodes are judged on completion alone.
    """
    done = satisfied_leaves(state, goal)
    if completion_order is None:
        order = [leaf for leaf in dict.fromkeys(logic_leaves(goal.logic)) if leaf in done]
    else:
        order = [leaf for leaf in completion_order if leaf in done]
        order += sorted(done - set(order))
    return int(evaluate_logic(goal.logic, done, order, known_ids=goal.leaves))


class ProgressTracker:
    """Records the order in which goal leaves become satisfied along a trajectory.

    A leaf that stops holding is dropped; if it holds again it moves to the end.
    """

    def __init__(self, goal: Goal):
        self.goal = goal
        self.order: list[str] = []

    def update(self, state: EnvState) -> list[str]:
        now = satisfied_leaves(state, self.goal)
        self.order = [leaf for leaf in self.order if leaf in now]
        new = sorted(now - set(self.order))
        self.order.extend(new)
        return new

    def reward(self, state: EnvState) -> int:
        return reward(state, self.goal, self.order)
