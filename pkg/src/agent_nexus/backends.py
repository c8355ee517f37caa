"""Model backends for the planner, navigator and analyst roles.

Every backend takes labeled UTF-8 text blocks and returns one text reply plus
usage figures. Two adapters ship: scripted backends driven by a keyed
response table (deterministic, used for oracles and fault injection) and an
HTTP adapter that forwards the same blocks to a remote endpoint.
"""

from __future__ import annotations

import json
import math
import re
import threading
import time
import urllib.request
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence


@dataclass(frozen=True)
class BackendReply:
    text: str
    tokens_in: int = 0
    tokens_out: int = 0
    infer_ms: float = 0.0


class Backend(Protocol):
    identity: str

    def complete(self, blocks: Mapping[str, str]) -> BackendReply: ...


def render_blocks(blocks: Mapping[str, str]) -> str:
    return "".join(f"### {name}\n{text}\n" for name, text in blocks.items())


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


# --- shared helpers for scripted backends ---------------------------------

_FIELD = re.compile(r"\{(\w+)(?::(-?\d+))?\}")


def fill(template: str, groups: Mapping[str, str], thinks: Mapping[int, str] | None = None) -> str:
    """Substitute ``{name}`` from regex groups and ``{think}`` / ``{think:i}`` from memory."""
    thinks = thinks or {}

    def sub(m: re.Match) -> str:
        name, idx = m.group(1), m.group(2)
        if name == "think":
            if idx is not None:
                return thinks.get(int(idx), "")
            return thinks[max(thinks)] if thinks else ""
        return groups.get(name, m.group(0))

    return _FIELD.sub(sub, template)


_ENTRY = re.compile(r"^\[(\d+)\] ", re.M)


def parse_memory_text(text: str) -> tuple[int, dict[int, str]]:
    """Entry count and think texts recovered from a rendered memory block."""
    starts = list(_ENTRY.finditer(text))
    thinks: dict[int, str] = {}
    count = 0
    for k, m in enumerate(starts):
        idx = int(m.group(1))
        count = max(count, idx + 1)
        end = starts[k + 1].start() if k + 1 < len(starts) else len(text)
        body = text[m.end():end].rstrip("\n")
        for marker in (" → think: ", " → think (failed): "):
            if marker in body:
                thinks[idx] = body.split(marker, 1)[1]
                break
    return count, thinks


def _match(rules: Sequence[Mapping[str, Any]], text: str) -> tuple[Mapping[str, Any] | None, dict[str, str]]:
    for rule in rules:
        m = re.fullmatch(rule["match"], text.strip(), re.S)
        if m:
            return rule, {k: v for k, v in m.groupdict().items() if v is not None}
    return None, {}


class _Scripted:
    role = ""

    def __init__(self, identity: str, latency_ms: float = 0.0):
        self.identity = identity
        self.latency_ms = float(latency_ms)

    def complete(self, blocks: Mapping[str, str]) -> BackendReply:
        text = self.respond(blocks)
        return BackendReply(text, estimate_tokens(render_blocks(blocks)), estimate_tokens(text),
                            self.latency_ms)

    def respond(self, blocks: Mapping[str, str]) -> str:
        raise NotImplementedError


class ScriptedPlanner(_Scripted):
    """Plans from a table of goal patterns, each with one plan text per stage.

    The stage is the number of memory entries visible in the rendered memory,
    so the backend carries no state between calls.
    """

    role = "planner"

    def __init__(self, rules: Sequence[Mapping[str, Any]] = (), default: str | None = None,
                 identity: str = "scripted-planner", latency_ms: float = 0.0):
        super().__init__(identity, latency_ms)
        self.rules = list(rules)
        self.default = default

    def respond(self, blocks: Mapping[str, str]) -> str:
        rule, groups = _match(self.rules, blocks.get("goal", ""))
        if rule is None:
            return self.default if self.default is not None else "INFEASIBLE"
        stage, thinks = parse_memory_text(blocks.get("memory", ""))
        stages = rule["stages"]
        return fill(stages[min(stage, len(stages) - 1)], groups, thinks)


_HISTORY_STEP = re.compile(r"^#(\d+) ", re.M)
_OBS_LINE = re.compile(r'^(?P<id>\S+) \[(?P<role>[\w-]+)\] (?P<label>"(?:[^"\\]|\\.)*")', re.M)


class ScriptedNavigator(_Scripted):
    """Replays action scripts selected by instruction pattern.

    Script lines are ``Tap <id>``, ``TapLabel <label>`` (grounded against the
    observation), ``Type <text>``, ``Swipe <dir>``, ``Back`` and ``Home``.
    The position in the script comes from the step numbers in the history block.
    """

    role = "navigator"

    def __init__(self, rules: Sequence[Mapping[str, Any]] = (), identity: str = "scripted-navigator",
                 latency_ms: float = 0.0):
        super().__init__(identity, latency_ms)
        self.rules = list(rules)

    def respond(self, blocks: Mapping[str, str]) -> str:
        rule, groups = _match(self.rules, blocks.get("instruction", ""))
        if rule is None:
            return 'REASONING: no script for this instruction\nACTION: Stop(completed=false, "unknown instruction")'
        steps = [int(n) for n in _HISTORY_STEP.findall(blocks.get("history", ""))]
        k = max(steps) + 1 if steps else 0
        script = rule.get("actions", [])
        if rule.get("loop") and script:
            line = script[k % len(script)]
        elif k < len(script):
            line = script[k]
        else:
            stop = rule.get("stop", {"completed": True, "note": "done"})
            flag = "true" if stop.get("completed", True) else "false"
            note = json.dumps(fill(stop.get("note", ""), groups), ensure_ascii=False)
            return f"REASONING: script finished\nACTION: Stop(completed={flag}, {note})"
        action = self._ground(fill(line, groups), blocks.get("observation", ""))
        if action is None:
            return f'REASONING: target not on screen for step {k}\nACTION: Stop(completed=false, "element not found")'
        return f"REASONING: script step {k}\nACTION: {action}"

    @staticmethod
    def _ground(line: str, observation: str) -> str | None:
        verb, _, arg = line.partition(" ")
        if verb == "TapLabel":
            for m in _OBS_LINE.finditer(observation):
                if json.loads(m["label"]) == arg:
                    return f"Tap({m['id']})"
            return None
        if verb == "Tap":
            return f"Tap({arg})"
        if verb == "Type":
            return f"Type({json.dumps(arg, ensure_ascii=False)})"
        if verb == "Swipe":
            return f"Swipe({arg})"
        if verb in ("Back", "Home"):
            return verb
        raise ValueError(f"bad script line {line!r}")


def format_number(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.10f}".rstrip("0").rstrip(".")


class ScriptedAnalyst(_Scripted):
    """Answers think instructions by pattern operations over the observation text.

    Operations: ``text`` (fixed reply), ``extract`` (first/last capture),
    ``sum`` and ``count`` over all matches, ``argmax`` (key with the largest value).
    """

    role = "analyst"

    def __init__(self, rules: Sequence[Mapping[str, Any]] = (), identity: str = "scripted-analyst",
                 latency_ms: float = 0.0):
        super().__init__(identity, latency_ms)
        self.rules = list(rules)

    def respond(self, blocks: Mapping[str, str]) -> str:
        rule, groups = _match(self.rules, blocks.get("instruction", ""))
        if rule is None:
            return "FAILED: no analysis rule for this instruction"
        op = rule["op"]
        if op == "text":
            return fill(rule["value"], groups)
        escaped = {k: re.escape(v) for k, v in groups.items()}
        pattern = re.compile(fill(rule["pattern"], escaped), re.M)
        matches = list(pattern.finditer(blocks.get("observation", "")))
        if op == "count":
            return str(len(matches))
        if not matches:
            return "FAILED: nothing matched on screen"
        if op == "extract":
            m = matches[-1] if rule.get("which") == "last" else matches[0]
            return json.loads(f'"{m.group(1)}"')
        if op == "sum":
            return format_number(sum(float(m.group(1)) for m in matches))
        if op == "argmax":
            best = max(matches, key=lambda m: float(m.group("value")))
            return json.loads(f'"{best.group("key")}"')
        raise ValueError(f"unknown analyst op {op!r}")


_SCRIPTED = {"planner": ScriptedPlanner, "navigator": ScriptedNavigator, "analyst": ScriptedAnalyst}


def scripted_from_dict(d: Mapping[str, Any], role: str | None = None) -> _Scripted:
    role = role or d["role"]
    kwargs: dict[str, Any] = {"rules": d.get("rules", ())}
    if "identity" in d:
        kwargs["identity"] = d["identity"]
    if "latency_ms" in d:
        kwargs["latency_ms"] = d["latency_ms"]
    if role == "planner" and "default" in d:
        kwargs["default"] = d["default"]
    return _SCRIPTED[role](**kwargs)


def load_scripted(path: str | Path, role: str | None = None) -> _Scripted:
    with open(path, encoding="utf-8") as fh:
        return scripted_from_dict(json.load(fh), role)


# --- remote adapter --------------------------------------------------------

class HttpBackend:
    """POSTs ``{"blocks": {...}}`` as JSON and expects ``{"text": ...}`` back,
    optionally with ``tokens_in``, ``tokens_out`` and ``infer_ms``."""

    def __init__(self, url: str, identity: str = "remote", timeout: float = 60.0):
        self.url = url
        self.identity = identity
        self.timeout = timeout

    def complete(self, blocks: Mapping[str, str]) -> BackendReply:
        body = json.dumps({"blocks": dict(blocks)}, ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, headers={"Content-Type": "application/json"})
        t0 = time.perf_counter()
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            data = json.loads(resp.read().decode("utf-8"))
        elapsed = (time.perf_counter() - t0) * 1000
        text = str(data["text"])
        return BackendReply(text,
                            int(data.get("tokens_in", estimate_tokens(render_blocks(blocks)))),
                            int(data.get("tokens_out", estimate_tokens(text))),
                            float(data.get("infer_ms", elapsed)))


def serve_backend(backend: Backend, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Expose a backend over HTTP in a daemon thread. Stop with ``server.shutdown()``."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            blocks = json.loads(self.rfile.read(length).decode("utf-8"))["blocks"]
            reply = backend.complete(blocks)
            out = json.dumps({"text": reply.text, "tokens_in": reply.tokens_in,
                              "tokens_out": reply.tokens_out, "infer_ms": reply.infer_ms},
                             ensure_ascii=False).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(out)))
            self.end_headers()
            self.wfile.write(out)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server


def backend_from_spec(spec: Mapping[str, Any], role: str, base: Path | None = None) -> Backend:
    """Build a backend from ``{"scripted": path}`` or ``{"remote": url, "identity": ...}``."""
    if "scripted" in spec:
        path = Path(spec["scripted"])
        if base is not None and not path.is_absolute():
            path = base / path
        return load_scripted(path, role)
    if "remote" in spec:
        return HttpBackend(spec["remote"], spec.get("identity", f"remote-{role}"),
                           float(spec.get("timeout", 60.0)))
    raise ValueError(f"backend spec for {role} needs 'scripted' or 'remote'")
