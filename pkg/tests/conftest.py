import pytest

_RESULTS: dict = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: call with (criterion, passed, detail)."""

    def record(criterion: str, passed: bool, detail: str = ""):
        line = f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _RESULTS[criterion] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_RESULTS, key=lambda k: int(k[1:])):
            terminalreporter.write_line(_RESULTS[key])
