import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def record(request):
    """Store one acceptance verdict; the lines are printed in the terminal summary."""
    def _record(number, title, passed, detail, elapsed):
        request.config.stash[ACCEPTANCE][number] = (title, bool(passed), detail, elapsed)
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[ACCEPTANCE]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail, elapsed = results[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title} ({elapsed:.1f} s): {detail}")
