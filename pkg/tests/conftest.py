import sys
from pathlib import Path

import pytest

from batman.scenario import master_hash, registration

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reg_payloads():
    """Pre-mined registrations for a few hostnames at tick 0."""
    return {name: registration(name, 0) for name in ("alpha", "bravo", "charlie", "delta")}


@pytest.fixture
def mh():
    return master_hash
