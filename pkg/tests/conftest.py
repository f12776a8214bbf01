import pytest

from cryptonl import _kernels

_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    # JIT compilation is a one-off cost, kept out of runtime budgets
    _kernels.warmup()


@pytest.fixture
def acceptance_log(request):
    """List collecting one pass/fail line per acceptance criterion."""
    return request.config.stash.setdefault(_LINES, [])


def pytest_terminal_summary(terminalreporter):
    lines = terminalreporter.config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
