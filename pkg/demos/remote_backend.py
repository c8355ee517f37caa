"""Serve the oracle analyst over HTTP and run a task with the remote adapter in its place.

Any service that accepts ``{"blocks": {...}}`` and answers ``{"text": ...}`` can
stand in for a role the same way.
"""

from dataclasses import replace

from agent_nexus.backends import HttpBackend, serve_backend
from agent_nexus.builtin import core_suite, oracle_backends
from agent_nexus.env.state import builtin_device
from agent_nexus.scheduler import run_episode

backends = oracle_backends()
server = serve_backend(backends.analyst)
url = f"http://127.0.0.1:{server.server_address[1]}/"
try:
    remote = replace(backends, analyst=HttpBackend(url, identity="oracle-analyst"))
    task = next(t for t in core_suite().tasks if t.id == "dd-01")
    rec = run_episode(task, builtin_device(), "clean", remote)
    print(f"analyst served at {url}")
    print(f"{task.id}: {task.instruction}")
    print(f"termination={rec.termination.value} reward={rec.reward}")
finally:
    server.shutdown()
