"""Declarative app machines and their data-store schemas."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping


class AppDefinitionError(ValueError):
    pass


class SchemaMismatch(KeyError):
    pass


_PATH = re.compile(
    r"^(?P<table>\w+)"
    r"(?:\[(?P<filter>\*|(?P<fkey>\w+)=(?P<fval>[^\]]*))\])?"
    r"(?:\.(?P<field>\w+))?$"
)


@dataclass(frozen=True)
class StoreSchema:
    """Tables are either collections (lists of records) or maps (fixed keys)."""

    collections: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    maps: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> StoreSchema:
        cols, maps = {}, {}
        for name, spec in d.items():
            if spec["kind"] == "collection":
                cols[name] = tuple(spec["fields"])
            elif spec["kind"] == "map":
                maps[name] = tuple(spec["keys"])
            else:
                raise AppDefinitionError(f"table {name}: unknown kind {spec['kind']!r}")
        return cls(cols, maps)

    def empty_store(self) -> dict:
        store: dict[str, Any] = {name: [] for name in self.collections}
        store.update({name: dict.fromkeys(keys) for name, keys in self.maps.items()})
        return store

    def check_path(self, path: str) -> str | None:
        m = _PATH.match(path)
        if not m:
            return "malformed path"
        table, fld, fkey = m["table"], m["field"], m["fkey"]
        if table in self.collections:
            fields = self.collections[table]
            if fkey and fkey not in fields:
                return f"unknown filter field {fkey!r} in {table!r}"
            if fld and fld not in fields:
                return f"unknown field {fld!r} in {table!r}"
            return None
        if table in self.maps:
            if m["filter"]:
                return f"map {table!r} cannot be filtered"
            if fld and fld not in self.maps[table]:
                return f"unknown key {fld!r} in {table!r}"
            return None
        return f"unknown table {table!r}"

    def resolve(self, store: Mapping[str, Any], path: str) -> list:
        """Values addressed by ``path``; always a list (possibly empty)."""
        problem = self.check_path(path)
        if problem:
            raise SchemaMismatch(f"{path}: {problem}")
        m = _PATH.match(path)
        table, fld = m["table"], m["field"]
        if table in self.maps:
            data = store.get(table, {})
            return [data.get(fld)] if fld else [data]
        rows = list(store.get(table, []))
        if m["fkey"]:
            rows = [r for r in rows if _text(r.get(m["fkey"])) == m["fval"]]
        if fld:
            return [r.get(fld) for r in rows]
        return rows


def _text(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


ELEMENT_KINDS = ("button", "text", "input", "toggle", "icon", "list")
OPS = ("goto", "back", "select", "clear_draft", "append")


@dataclass(frozen=True)
class AppMachine:
    id: str
    label: str
    root: str
    screens: Mapping[str, tuple[Mapping[str, Any], ...]]
    schema: StoreSchema
    seed: Mapping[str, Any]
    fingerprint: str = ""

    def check_path(self, path: str) -> str | None:
        return self.schema.check_path(path)

    def initial_store(self) -> dict:
        store = self.schema.empty_store()
        for name, value in json.loads(json.dumps(self.seed)).items():
            store[name] = value
        return store

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> AppMachine:
        canonical = json.dumps(d, sort_keys=True, separators=(",", ":"))
        app = cls(
            id=d["id"], label=d["label"], root=d["root"],
            screens={k: tuple(v) for k, v in d["screens"].items()},
            schema=StoreSchema.from_dict(d["store"]),
            seed=d.get("seed", {}),
            fingerprint=hashlib.sha256(canonical.encode()).hexdigest()[:16],
        )
        problems = app.problems()
        if problems:
            raise AppDefinitionError(f"app {app.id}: " + "; ".join(problems))
        return app

    def problems(self) -> list[str]:
        out = []
        if self.root not in self.screens:
            out.append(f"root screen {self.root!r} missing")
        for table in self.seed:
            if table not in self.schema.collections and table not in self.schema.maps:
                out.append(f"seed for unknown table {table!r}")
        for sname, elements in self.screens.items():
            static_ids, list_ids = [], []
            for el in elements:
                kind = el.get("kind")
                if kind not in ELEMENT_KINDS:
                    out.append(f"{sname}: unknown element kind {kind!r}")
                    continue
                (list_ids if kind == "list" else static_ids).append(el["id"])
                if kind == "list":
                    src = el.get("source")
                    fields = self.schema.collections.get(src)
                    if fields is None:
                        out.append(f"{sname}/{el['id']}: unknown source {src!r}")
                    elif el.get("toggle_field") and el["toggle_field"] not in fields:
                        out.append(f"{sname}/{el['id']}: unknown toggle field")
                for op in el.get("on_tap", ()):
                    out.extend(f"{sname}/{el['id']}: {p}" for p in self._op_problems(op, el))
            if len(static_ids + list_ids) != len(set(static_ids + list_ids)):
                out.append(f"{sname}: duplicate element ids")
            for sid in static_ids:
                for lid in list_ids:
                    if re.fullmatch(re.escape(lid) + r"_\d+", sid):
                        out.append(f"{sname}: id {sid!r} collides with list {lid!r}")
        return out

    def _op_problems(self, op: Mapping[str, Any], el: Mapping[str, Any]) -> list[str]:
        name = op.get("op")
        if name not in OPS:
            return [f"unknown op {name!r}"]
        if name == "goto" and op.get("screen") not in self.screens:
            return [f"goto target {op.get('screen')!r} does not exist"]
        if name == "append":
            fields = self.schema.collections.get(op.get("collection"))
            if fields is None:
                return [f"append to unknown collection {op.get('collection')!r}"]
            bad = [f for f in op.get("fields", {}) if f not in fields]
            if bad:
                return [f"append sets unknown fields {bad}"]
        if name == "select" and el.get("kind") != "list":
            return ["select is only valid on list items"]
        return []


def load_app(path: str | Path) -> AppMachine:
    with open(path, encoding="utf-8") as fh:
        return AppMachine.from_dict(json.load(fh))


def builtin_apps() -> dict[str, AppMachine]:
    root = resources.files("agent_nexus") / "data" / "apps"
    apps = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            app = AppMachine.from_dict(json.loads(entry.read_text(encoding="utf-8")))
            apps[app.id] = app
    return apps


SYSTEM_SCHEMA = StoreSchema(maps={"session": ("answer",)})
