import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict_line(request):
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""
    lines = request.config.stash.setdefault(_KEY, [])

    def emit(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
