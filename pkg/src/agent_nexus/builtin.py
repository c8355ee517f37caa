"""Access to the data shipped with the package: the core suite and oracle backends."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .backends import load_scripted
from .scheduler import Backends
from .task_model import TaskSuite, load_suite


def data_path(*parts: str) -> Path:
    return Path(str(resources.files("agent_nexus").joinpath("data", *parts)))


def core_suite(*, expand: bool = False, seed: int = 0) -> TaskSuite:
    suite = load_suite(data_path("suites", "core.json"))
    return suite.expanded(seed) if expand else suite


def oracle_backends() -> Backends:
    """Scripted planner, navigator and analyst that solve every task in the core suite."""
    return Backends(
        planner=load_scripted(data_path("oracle", "planner.json"), "planner"),
        navigator=load_scripted(data_path("oracle", "navigator.json"), "navigator"),
        analyst=load_scripted(data_path("oracle", "analyst.json"), "analyst"),
    )
