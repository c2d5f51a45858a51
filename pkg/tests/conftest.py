import pytest

from heraldsim.densop import pure_dm

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one acceptance line and assert on it."""
    lines = request.config.stash[_LINES_KEY]

    def record(name, passed, detail=""):
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
        assert passed, f"{name}: {detail}"

    return record


@pytest.fixture
def plus_plus():
    return pure_dm([0.5, 0.5, 0.5, 0.5], (2, 2))
