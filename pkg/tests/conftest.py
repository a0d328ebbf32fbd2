import pytest

_LINES = pytest.StashKey()


@pytest.fixture
def criterion(request):
    """Report one acceptance criterion: prints a PASS/FAIL line (kept for the
    terminal summary) and fails the test when ``passed`` is false."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        lines.append((number, line))
        assert passed, line
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.write_sep('=', 'acceptance criteria')
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
