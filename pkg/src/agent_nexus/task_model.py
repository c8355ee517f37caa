"""Compositional tasks, compound-logic expressions and task templates.

A compositional task is a set of atomic subtasks plus a dependency relation
between them. Success is judged through checkpoints over app data stores,
combined by a compound-logic expression whose leaves are subtask ids.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union


class TaskError(ValueError):
    pass


class MissingBinding(TaskError):
    pass


class ValueOutOfDomain(TaskError):
    pass


class UnknownId(TaskError):
    pass


class CompositionType(str, Enum):
    SIMPLE_CONCATENATION = "SimpleConcatenation"
    CONTEXT_TRANSITION = "ContextTransition"
    DEEP_DIVE = "DeepDive"

    @property
    def short(self) -> str:
        return {"SimpleConcatenation": "SC", "ContextTransition": "CT", "DeepDive": "DD"}[self.value]


CHECKPOINT_OPS = ("eq", "contains", "count_eq", "ge")


@dataclass(frozen=True)
class AtomicSubtaskSpec:
    id: str
    command: str
    params: Mapping[str, str] = field(default_factory=dict)
    environment: str = "system"

    def to_dict(self) -> dict:
        return {"id": self.id, "command": self.command, "params": dict(self.params),
                "environment": self.environment}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> AtomicSubtaskSpec:
        return cls(id=str(d["id"]), command=str(d["command"]),
                   params={str(k): str(v) for k, v in d.get("params", {}).items()},
                   environment=str(d.get("environment", "system")))


# --- compound logic -------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    id: str


@dataclass(frozen=True)
class Sequential:
    children: tuple[LogicExpr, ...]


@dataclass(frozen=True)
class Conjunctive:
    children: tuple[LogicExpr, ...]


@dataclass(frozen=True)
class Disjunctive:
    children: tuple[LogicExpr, ...]


@dataclass(frozen=True)
class Hierarchical:
    label: str
    children: tuple[LogicExpr, ...]


LogicExpr = Union[Leaf, Sequential, Conjunctive, Disjunctive, Hierarchical]

_KINDS = {"sequential": Sequential, "conjunctive": Conjunctive, "disjunctive": Disjunctive}


def logic_from_json(obj: Any) -> LogicExpr:
    """Parse a logic tree. Leaves are bare subtask-id strings."""
    if isinstance(obj, str):
        return Leaf(obj)
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise TaskError(f"bad logic node: {obj!r}")
    kind = obj["kind"]
    children = tuple(logic_from_json(c) for c in obj.get("children", ()))
    if kind == "hierarchical":
        return Hierarchical(str(obj.get("label", "")), children)
    if kind not in _KINDS:
        raise TaskError(f"unknown logic kind {kind!r}")
    return _KINDS[kind](children)


def logic_to_json(expr: LogicExpr) -> Any:
    if isinstance(expr, Leaf):
        return expr.id
    out: dict[str, Any] = {"kind": type(expr).__name__.lower()}
    if isinstance(expr, Hierarchical):
        out["label"] = expr.label
    out["children"] = [logic_to_json(c) for c in expr.children]
    return out


def logic_leaves(expr: LogicExpr) -> list[str]:
    if isinstance(expr, Leaf):
        return [expr.id]
    return [leaf for c in expr.children for leaf in logic_leaves(c)]


def logic_depth(expr: LogicExpr) -> int:
    if isinstance(expr, Leaf):
        return 1
    return 1 + max((logic_depth(c) for c in expr.children), default=0)


def _structure_errors(expr: LogicExpr) -> list[str]:
    if isinstance(expr, Leaf):
        return []
    errs = []
    name = type(expr).__name__
    need = 2 if isinstance(expr, (Conjunctive, Disjunctive)) else 1
    if len(expr.children) < need:
        errs.append(f"{name} node needs at least {need} children, has {len(expr.children)}")
    for c in expr.children:
        errs.extend(_structure_errors(c))
    return errs


def evaluate_logic(expr: LogicExpr, completed: Iterable[str],
                   completion_order: Sequence[str],
                   known_ids: Iterable[str] | None = None) -> bool:
    """Decide whether ``expr`` holds given which subtasks completed and when.

    ``completion_order`` lists every completed id exactly once, earliest
    first. A Sequential node additionally requires its children to complete
    in declared order, where a composite child completes when it first becomes
    true (Conjunctive: last child, Disjunctive: first true child).
    """
    done = set(completed)
    known = set(known_ids) if known_ids is not None else set(logic_leaves(expr))
    unknown = done - known
    if unknown:
        raise UnknownId(f"undeclared subtask ids: {sorted(unknown)}")
    if len(completion_order) != len(set(completion_order)) or set(completion_order) != done:
        raise TaskError("completion_order must list each completed id exactly once")
    position = {sid: i for i, sid in enumerate(completion_order)}
    return _eval(expr, position)[0]


def _eval(expr: LogicExpr, pos: Mapping[str, int]) -> tuple[bool, int]:
    # returns (holds, index in completion order at which it first held)
    if isinstance(expr, Leaf):
        if expr.id in pos:
            return True, pos[expr.id]
        return False, -1
    results = [_eval(c, pos) for c in expr.children]
    if isinstance(expr, Disjunctive):
        times = [t for ok, t in results if ok]
        return (True, min(times)) if times else (False, -1)
    if not all(ok for ok, _ in results):
        return False, -1
    times = [t for _, t in results]
    if isinstance(expr, Sequential) and any(a > b for a, b in zip(times, times[1:])):
        return False, -1
    return True, max(times, default=-1)


# --- checkpoints and tasks -------------------------------------------------

@dataclass(frozen=True)
class Predicate:
    path: str
    op: str
    expected: Any

    def __post_init__(self):
        if self.op not in CHECKPOINT_OPS:
            raise TaskError(f"unknown checkpoint operator {self.op!r}")


@dataclass(frozen=True)
class Checkpoint:
    app: str
    predicate: Predicate
    subtask: str

    def to_dict(self) -> dict:
        p = self.predicate
        return {"app": self.app, "subtask": self.subtask,
                "predicate": {"path": p.path, "op": p.op, "expected": p.expected}}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Checkpoint:
        p = d["predicate"]
        return cls(app=str(d["app"]), subtask=str(d["subtask"]),
                   predicate=Predicate(str(p["path"]), str(p["op"]), p["expected"]))


@dataclass(frozen=True)
class CompositionalTask:
    id: str
    instruction: str
    subtasks: tuple[AtomicSubtaskSpec, ...]
    dependencies: tuple[tuple[str, str], ...]
    logic: LogicExpr
    composition_type: CompositionType
    checkpoints: tuple[Checkpoint, ...]
    optimal_steps: int

    @property
    def subtask_ids(self) -> list[str]:
        return [s.id for s in self.subtasks]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "subtasks": [s.to_dict() for s in self.subtasks],
            "dependencies": [list(d) for d in self.dependencies],
            "logic": logic_to_json(self.logic),
            "composition_type": self.composition_type.value,
            "checkpoints": [c.to_dict() for c in self.checkpoints],
            "optimal_steps": self.optimal_steps,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> CompositionalTask:
        return cls(
            id=str(d["id"]),
            instruction=str(d["instruction"]),
            subtasks=tuple(AtomicSubtaskSpec.from_dict(s) for s in d["subtasks"]),
            dependencies=tuple((str(a), str(b)) for a, b in d.get("dependencies", ())),
            logic=logic_from_json(d["logic"]),
            composition_type=CompositionType(d["composition_type"]),
            checkpoints=tuple(Checkpoint.from_dict(c) for c in d.get("checkpoints", ())),
            optimal_steps=int(d["optimal_steps"]),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


# --- validation ------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.errors)


def find_cycle(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> list[str] | None:
    """Return one directed cycle as a node list, or None when the graph is a DAG."""
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, [])
    color = dict.fromkeys(adj, 0)
    stack: list[str] = []

    def visit(n: str) -> list[str] | None:
        color[n] = 1
        stack.append(n)
        for m in adj[n]:
            if color[m] == 1:
                return stack[stack.index(m):] + [m]
            if color[m] == 0:
                found = visit(m)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in sorted(adj):
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return None


def validate(task: CompositionalTask, apps: Mapping[str, Any] | None = None) -> ValidationReport:
    """Check structural consistency of a task.

    ``apps`` maps app id to an object exposing ``check_path(path) -> str | None``;
    when given, subtask environments and checkpoint paths are checked too.
    """
    rep = ValidationReport()
    ids = task.subtask_ids
    id_set = set(ids)
    if len(ids) != len(id_set):
        rep.errors.append("duplicate subtask ids")
    if not task.subtasks:
        rep.errors.append("task has no subtasks")
    for s in task.subtasks:
        if not s.command.strip():
            rep.errors.append(f"subtask {s.id}: empty command")
        if apps is not None and s.environment != "system" and s.environment not in apps:
            rep.errors.append(f"subtask {s.id}: unknown environment {s.environment!r}")
    for a, b in task.dependencies:
        for end in (a, b):
            if end not in id_set:
                rep.errors.append(f"dependency endpoint {end!r} is not a subtask")
    cycle = find_cycle(ids, task.dependencies)
    if cycle:
        rep.errors.append("dependency cycle: " + " -> ".join(cycle))
    leaves = logic_leaves(task.logic)
    for leaf in leaves:
        if leaf not in id_set:
            rep.errors.append(f"logic leaf {leaf!r} is not a subtask")
    rep.errors.extend(_structure_errors(task.logic))
    if task.optimal_steps < 1:
        rep.errors.append("optimal_steps must be >= 1")
    checked = set()
    for cp in task.checkpoints:
        checked.add(cp.subtask)
        if cp.subtask not in id_set:
            rep.errors.append(f"checkpoint references unknown subtask {cp.subtask!r}")
        if apps is not None:
            if cp.app != "system" and cp.app not in apps:
                rep.errors.append(f"checkpoint references unknown app {cp.app!r}")
            elif cp.app in apps:
                problem = apps[cp.app].check_path(cp.predicate.path)
                if problem:
                    rep.errors.append(f"checkpoint path {cp.predicate.path!r}: {problem}")
    for leaf in sorted(set(leaves) - checked):
        rep.warnings.append(f"logic leaf {leaf!r} has no checkpoint and can never be satisfied")
    if task.composition_type is CompositionType.CONTEXT_TRANSITION and not task.dependencies:
        rep.warnings.append("ContextTransition task declares no dependencies")
    return rep


# --- templates -------------------------------------------------------------

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _placeholders_in(obj: Any) -> set[str]:
    if isinstance(obj, str):
        return set(_PLACEHOLDER.findall(obj))
    if isinstance(obj, Mapping):
        return set().union(*(_placeholders_in(v) for v in obj.values()), set())
    if isinstance(obj, (list, tuple)):
        return set().union(*(_placeholders_in(v) for v in obj), set())
    return set()


def _substitute(obj: Any, values: Mapping[str, str]) -> Any:
    if isinstance(obj, str):
        return _PLACEHOLDER.sub(lambda m: values[m.group(1)], obj)
    if isinstance(obj, Mapping):
        return {k: _substitute(v, values) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_substitute(v, values) for v in obj]
    return obj


@dataclass(frozen=True)
class TaskTemplate:
    """A task skeleton with ``{name}`` placeholders in any string field.

    ``derived`` placeholders are looked up from the value bound to another
    placeholder, e.g. the expected note body for a chosen note title.
    """

    id: str
    skeleton: Mapping[str, Any]
    domains: Mapping[str, tuple[str, ...]]
    derived: Mapping[str, tuple[str, Mapping[str, str]]] = field(default_factory=dict)

    @property
    def instruction(self) -> str:
        return self.skeleton["instruction"]

    def check(self) -> list[str]:
        problems = []
        declared = set(self.domains) | set(self.derived)
        for name in sorted(_placeholders_in(self.skeleton) - declared):
            problems.append(f"placeholder {name!r} has no domain")
        for name, (source, table) in self.derived.items():
            if source not in self.domains:
                problems.append(f"derived {name!r} uses undeclared source {source!r}")
                continue
            missing = [v for v in self.domains[source] if v not in table]
            if missing:
                problems.append(f"derived {name!r} lacks values for {missing}")
        return problems

    def all_bindings(self) -> Iterable[dict[str, str]]:
        names = sorted(self.domains)
        for combo in itertools.product(*(self.domains[n] for n in names)):
            yield dict(zip(names, combo))

    def to_dict(self) -> dict:
        return {"id": self.id, "skeleton": dict(self.skeleton),
                "domains": {k: list(v) for k, v in self.domains.items()},
                "derived": {k: {"from": s, "map": dict(t)} for k, (s, t) in self.derived.items()}}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TaskTemplate:
        return cls(id=str(d["id"]), skeleton=d["skeleton"],
                   domains={k: tuple(map(str, v)) for k, v in d["domains"].items()},
                   derived={k: (v["from"], dict(v["map"])) for k, v in d.get("derived", {}).items()})


def instantiate(template: TaskTemplate, bindings: Mapping[str, str], seed: int = 0) -> CompositionalTask:
    """Fill a template's placeholders. Deterministic in (template, bindings, seed)."""
    for name in sorted(template.domains):
        if name not in bindings:
            raise MissingBinding(f"no binding for placeholder {name!r}")
        if bindings[name] not in template.domains[name]:
            raise ValueOutOfDomain(f"{bindings[name]!r} not in domain of {name!r}")
    extra = set(bindings) - set(template.domains)
    if extra:
        raise TaskError(f"bindings for undeclared placeholders: {sorted(extra)}")
    values = {k: str(bindings[k]) for k in template.domains}
    for name, (source, table) in template.derived.items():
        values[name] = table[values[source]]
    filled = _substitute(template.skeleton, values)
    key = json.dumps({"b": values, "seed": seed}, sort_keys=True, ensure_ascii=False)
    digest = hashlib.sha256((template.id + key).encode()).hexdigest()[:8]
    filled["id"] = f"{template.id}-{digest}"
    return CompositionalTask.from_dict(filled)


# --- suites ----------------------------------------------------------------

@dataclass(frozen=True)
class TaskSuite:
    name: str
    version: str
    tasks: tuple[CompositionalTask, ...]
    templates: tuple[TaskTemplate, ...] = ()

    def task(self, task_id: str) -> CompositionalTask:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def expanded(self, seed: int = 0) -> TaskSuite:
        """Suite with every template instantiated over its full domain product."""
        extra = [instantiate(tpl, b, seed) for tpl in self.templates for b in tpl.all_bindings()]
        return TaskSuite(self.name, self.version, self.tasks + tuple(extra), self.templates)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "version": self.version,
                               "tasks": [t.to_dict() for t in self.tasks]}
        if self.templates:
            out["templates"] = [t.to_dict() for t in self.templates]
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> TaskSuite:
        return cls(name=str(d["name"]), version=str(d["version"]),
                   tasks=tuple(CompositionalTask.from_dict(t) for t in d.get("tasks", ())),
                   templates=tuple(TaskTemplate.from_dict(t) for t in d.get("templates", ())))


def load_suite(path: str | Path) -> TaskSuite:
    with open(path, encoding="utf-8") as fh:
        return TaskSuite.from_dict(json.load(fh))


def dump_suite(suite: TaskSuite, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(suite.to_dict(), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
