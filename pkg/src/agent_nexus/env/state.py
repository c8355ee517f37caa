"""Deterministic device simulator: state, actions, observations, transitions."""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Union

from .apps import SYSTEM_SCHEMA, AppMachine, builtin_apps

HOME = "home"
SYSTEM = "system"
MAX_TYPE_LEN = 4096
ROLES = ("button", "text", "input", "list-item", "toggle", "icon")


class UnknownSnapshot(KeyError):
    pass


# --- actions ---------------------------------------------------------------

@dataclass(frozen=True)
class Tap:
    element: str

    def __str__(self) -> str:
        return f"Tap({self.element})"


@dataclass(frozen=True)
class Type:
    text: str

    def __post_init__(self):
        if len(self.text) > MAX_TYPE_LEN:
            raise ValueError(f"Type text longer than {MAX_TYPE_LEN} characters")

    def __str__(self) -> str:
        return f"Type({json.dumps(self.text, ensure_ascii=False)})"


@dataclass(frozen=True)
class Swipe:
    direction: str

    def __post_init__(self):
        if self.direction not in ("up", "down", "left", "right"):
            raise ValueError(f"bad swipe direction {self.direction!r}")

    def __str__(self) -> str:
        return f"Swipe({self.direction})"


@dataclass(frozen=True)
class Back:
    def __str__(self) -> str:
        return "Back"


@dataclass(frozen=True)
class Home:
    def __str__(self) -> str:
        return "Home"


@dataclass(frozen=True)
class Stop:
    answer: str | None = None

    def __str__(self) -> str:
        if self.answer is None:
            return "Stop"
        return f"Stop({json.dumps(self.answer, ensure_ascii=False)})"


Action = Union[Tap, Type, Swipe, Back, Home, Stop]

_ACTION_RE = re.compile(r"^\s*(?P<name>\w+)\s*(?:\((?P<arg>.*)\))?\s*$", re.S)


def parse_action(text: str) -> Action:
    """Inverse of ``str(action)``. Raises ValueError on anything else."""
    m = _ACTION_RE.match(text)
    if not m:
        raise ValueError(f"unparseable action {text!r}")
    name, arg = m["name"], m["arg"]
    if name in ("Back", "Home") and not arg:
        return Back() if name == "Back" else Home()
    if name == "Stop":
        return Stop(json.loads(arg) if arg else None)
    if name == "Tap" and arg and re.fullmatch(r"[\w\-.]+", arg.strip()):
        return Tap(arg.strip())
    if name == "Swipe" and arg:
        return Swipe(arg.strip())
    if name == "Type" and arg is not None:
        value = json.loads(arg)
        if isinstance(value, str):
            return Type(value)
    raise ValueError(f"unparseable action {text!r}")


# --- observation -----------------------------------------------------------

@dataclass(frozen=True)
class Element:
    id: str
    role: str
    label: str
    value: str | None = None
    actionable: bool = False

    def render(self) -> str:
        line = f"{self.id} [{self.role}] {json.dumps(self.label, ensure_ascii=False)}"
        if self.value is not None:
            line += f" = {json.dumps(self.value, ensure_ascii=False)}"
        if self.actionable:
            line += " (tap)"
        return line


@dataclass(frozen=True)
class Observation:
    foreground: str
    screen: str
    elements: tuple[Element, ...]

    @property
    def text(self) -> str:
        lines = [f"app: {self.foreground} / screen: {self.screen}"]
        lines.extend(e.render() for e in self.elements)
        return "\n".join(lines)

    def element(self, element_id: str) -> Element | None:
        for e in self.elements:
            if e.id == element_id:
                return e
        return None


# --- state -----------------------------------------------------------------

def _fresh_ui() -> dict:
    return {"selected": None, "draft": {}, "focus": None}


@dataclass
class EnvState:
    """One device state. Treat as a value: ``step`` returns a new instance."""

    apps: Mapping[str, AppMachine]
    foreground: str = HOME
    stacks: dict[str, list[str]] = field(default_factory=dict)
    stores: dict[str, dict] = field(default_factory=dict)
    ui: dict[str, dict] = field(default_factory=dict)
    step_count: int = 0
    rng_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "apps": list(self.apps),
            "app_fingerprints": {k: a.fingerprint for k, a in self.apps.items()},
            "foreground": self.foreground,
            "stacks": self.stacks,
            "stores": self.stores,
            "ui": self.ui,
            "step_count": self.step_count,
            "rng_seed": self.rng_seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    def state_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def clone(self) -> EnvState:
        return EnvState(self.apps, self.foreground, copy.deepcopy(self.stacks),
                        copy.deepcopy(self.stores), copy.deepcopy(self.ui),
                        self.step_count, self.rng_seed)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], apps: Mapping[str, AppMachine]) -> EnvState:
        ids = list(d.get("apps", apps))
        missing = [a for a in ids if a not in apps]
        if missing:
            raise KeyError(f"snapshot references unknown apps {missing}")
        registry = {a: apps[a] for a in ids}
        stores = {a: registry[a].initial_store() for a in ids}
        stores[SYSTEM] = SYSTEM_SCHEMA.empty_store()
        for a, store in d.get("stores", {}).items():
            stores[a] = copy.deepcopy(store)
        stacks = {a: [registry[a].root] for a in ids}
        stacks.update({a: list(s) for a, s in d.get("stacks", {}).items()})
        ui = {a: _fresh_ui() for a in ids}
        for a, u in d.get("ui", {}).items():
            ui[a] = {"selected": u.get("selected"), "draft": dict(u.get("draft", {})),
                     "focus": u.get("focus")}
        fg = d.get("foreground", HOME)
        if fg != HOME and fg not in registry:
            raise ValueError(f"foreground {fg!r} is not a registered app")
        return cls(registry, fg, stacks, stores, ui, int(d.get("step_count", 0)),
                   int(d.get("rng_seed", 0)))


# --- screen materialization ------------------------------------------------

@dataclass(frozen=True)
class _Handler:
    ops: tuple
    record: tuple[str, int] | None = None
    toggle_field: str | None = None
    focus: str | None = None
    launch: str | None = None


def _ref(state: EnvState, app: str, value: Any) -> Any:
    if not isinstance(value, str) or not value.startswith("$"):
        return value
    scope, _, name = value[1:].partition(".")
    ui = state.ui[app]
    if scope == "draft":
        return ui["draft"].get(name, "")
    if scope == "selected":
        sel = ui["selected"]
        if sel is None:
            return None
        table, idx = sel
        rows = state.stores[app].get(table, [])
        return rows[idx].get(name) if 0 <= idx < len(rows) else None
    raise ValueError(f"bad reference {value!r}")


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    return "" if v is None else str(v)


def _materialize(state: EnvState) -> tuple[str, list[tuple[Element, _Handler | None]]]:
    if state.foreground == HOME:
        items = [(Element(f"icon_{a.id}", "icon", a.label, None, True), _Handler((), launch=a.id))
                 for a in state.apps.values()]
        return HOME, items
    app_id = state.foreground
    app = state.apps[app_id]
    screen = state.stacks[app_id][-1]
    out: list[tuple[Element, _Handler | None]] = []
    for el in app.screens[screen]:
        kind = el["kind"]
        ops = tuple(el.get("on_tap", ()))
        if kind == "list":
            rows = state.stores[app_id].get(el["source"], [])
            flt = {k: _fmt(_ref(state, app_id, v)) for k, v in el.get("filter", {}).items()}
            tfield = el.get("toggle_field")
            for i, row in enumerate(rows):
                if any(_fmt(row.get(k)) != v for k, v in flt.items()):
                    continue
                label = el["label"].format_map({k: _fmt(v) for k, v in row.items()})
                eid = f"{el['id']}_{i}"
                if tfield:
                    out.append((Element(eid, "toggle", label, _fmt(bool(row.get(tfield))), True),
                                _Handler(ops, (el["source"], i), toggle_field=tfield)))
                else:
                    out.append((Element(eid, "list-item", label, None, bool(ops)),
                                _Handler(ops, (el["source"], i)) if ops else None))
        elif kind == "text":
            value = _ref(state, app_id, el.get("value"))
            out.append((Element(el["id"], "text", el["label"], None if value is None else _fmt(value)), None))
        elif kind == "input":
            value = state.ui[app_id]["draft"].get(el["draft"], "")
            out.append((Element(el["id"], "input", el["label"], value, True),
                        _Handler(ops, focus=el["draft"])))
        else:
            out.append((Element(el["id"], kind, el["label"], None, True), _Handler(ops)))
    return screen, out


def observe(state: EnvState) -> Observation:
    screen, items = _materialize(state)
    return Observation(state.foreground, screen, tuple(e for e, _ in items))


# --- transitions -----------------------------------------------------------

@dataclass(frozen=True)
class Effect:
    noop: bool
    detail: str

    def __str__(self) -> str:
        return ("no-op: " if self.noop else "") + self.detail


def _back(s: EnvState) -> str:
    if s.foreground == HOME:
        return ""
    app = s.foreground
    s.ui[app]["focus"] = None
    if len(s.stacks[app]) > 1:
        s.stacks[app].pop()
        return f"back to {s.stacks[app][-1]}"
    s.foreground = HOME
    return "back to home"


def _run_ops(s: EnvState, handler: _Handler) -> list[str]:
    app = s.foreground
    ui = s.ui[app]
    notes = []
    if handler.focus is not None:
        ui["focus"] = handler.focus
        notes.append(f"focus {handler.focus}")
    if handler.toggle_field is not None and handler.record is not None:
        table, idx = handler.record
        row = s.stores[app][table][idx]
        row[handler.toggle_field] = not bool(row.get(handler.toggle_field))
        notes.append(f"{table}[{idx}].{handler.toggle_field}={_fmt(row[handler.toggle_field])}")
    for op in handler.ops:
        name = op["op"]
        if name == "goto":
            s.stacks[app].append(op["screen"])
            ui["focus"] = None
            notes.append(f"goto {op['screen']}")
        elif name == "back":
            notes.append(_back(s))
        elif name == "select":
            ui["selected"] = list(handler.record)
            notes.append(f"select {handler.record[0]}[{handler.record[1]}]")
        elif name == "clear_draft":
            ui["draft"] = {}
            ui["focus"] = None
        elif name == "append":
            record = {k: _ref(s, app, v) for k, v in op["fields"].items()}
            s.stores[app][op["collection"]].append(record)
            notes.append(f"append {op['collection']}")
    return notes


def step(state: EnvState, action: Action) -> tuple[EnvState, Effect]:
    """Apply one action. Total: invalid actions are no-ops that still cost a step."""
    s = state.clone()
    s.step_count += 1
    if isinstance(action, Tap):
        _, items = _materialize(state)
        hit = next(((e, h) for e, h in items if e.id == action.element), None)
        if hit is None:
            return s, Effect(True, f"unknown element {action.element}")
        element, handler = hit
        if not element.actionable or handler is None:
            return s, Effect(True, f"element {action.element} is not actionable")
        if handler.launch is not None:
            app = handler.launch
            s.foreground = app
            s.stacks[app] = [s.apps[app].root]
            s.ui[app] = _fresh_ui()
            return s, Effect(False, f"launch {app}")
        return s, Effect(False, "; ".join(n for n in _run_ops(s, handler) if n) or f"tap {element.id}")
    if isinstance(action, Type):
        if s.foreground == HOME or s.ui[s.foreground]["focus"] is None:
            return s, Effect(True, "no focused input")
        ui = s.ui[s.foreground]
        ui["draft"][ui["focus"]] = ui["draft"].get(ui["focus"], "") + action.text
        return s, Effect(False, f"typed into {ui['focus']}")
    if isinstance(action, Swipe):
        return s, Effect(True, "nothing to scroll")
    if isinstance(action, Back):
        detail = _back(s)
        return s, Effect(not detail, detail or "already home")
    if isinstance(action, Home):
        s.foreground = HOME
        return s, Effect(False, "home")
    if isinstance(action, Stop):
        if action.answer is not None:
            s.stores[SYSTEM]["session"]["answer"] = action.answer
        return s, Effect(False, "stop")
    raise TypeError(f"not an action: {action!r}")


# --- snapshots -------------------------------------------------------------

class Device:
    """App registry plus named snapshots; ``reset`` restores a stored state."""

    def __init__(self, apps: Mapping[str, AppMachine], snapshots: Mapping[str, Mapping[str, Any]] | None = None):
        self.apps = dict(apps)
        self._snapshots: dict[str, str] = {}
        for sid, snap in (snapshots or {}).items():
            self.register_snapshot(sid, snap)

    def register_snapshot(self, snapshot_id: str, snap: Mapping[str, Any] | EnvState) -> None:
        if isinstance(snap, EnvState):
            snap = snap.to_dict()
        EnvState.from_dict(snap, self.apps)  # fail early on bad snapshots
        self._snapshots[snapshot_id] = json.dumps(snap, sort_keys=True)

    @property
    def snapshot_ids(self) -> list[str]:
        return sorted(self._snapshots)

    def reset(self, snapshot_id: str) -> EnvState:
        if snapshot_id not in self._snapshots:
            raise UnknownSnapshot(snapshot_id)
        return EnvState.from_dict(json.loads(self._snapshots[snapshot_id]), self.apps)

    def snapshot_dict(self, snapshot_id: str) -> dict:
        if snapshot_id not in self._snapshots:
            raise UnknownSnapshot(snapshot_id)
        return json.loads(self._snapshots[snapshot_id])


def load_snapshot_file(path: str | Path) -> tuple[str, dict]:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return d.get("id", Path(path).stem), d


def builtin_device() -> Device:
    root = resources.files("agent_nexus") / "data" / "snapshots"
    snaps = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            d = json.loads(entry.read_text(encoding="utf-8"))
            snaps[d["id"]] = d
    return Device(builtin_apps(), snaps)
