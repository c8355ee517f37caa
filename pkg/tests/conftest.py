import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from agent_nexus.builtin import core_suite, oracle_backends  # noqa: E402
from agent_nexus.env import builtin_apps, builtin_device  # noqa: E402


@pytest.fixture(scope="session")
def apps():
    return builtin_apps()


@pytest.fixture()
def device():
    return builtin_device()


@pytest.fixture(scope="session")
def suite():
    return core_suite()


@pytest.fixture(scope="session")
def expanded_suite():
    return core_suite(expand=True)


@pytest.fixture(scope="session")
def oracle():
    return oracle_backends()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
