import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from morphoevo import builtin  # noqa: E402


@pytest.fixture(scope="session")
def channel():
    return builtin("channel")


@pytest.fixture(scope="session")
def channel_two():
    return builtin("channel_two")


@pytest.fixture(scope="session")
def compound():
    return builtin("compound")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
