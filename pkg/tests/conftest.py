import contextlib

import pytest

_LINES: dict[int, str] = {}


class _Outcome:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion():
    """``with criterion(n) as c:`` records one PASS/FAIL line for acceptance criterion ``n``."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        out = _Outcome()
        try:
            yield out
        except BaseException as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            _LINES[number] = f"criterion {number:>2} FAIL  {title}: {out.detail or reason}"
            raise
        _LINES[number] = f"criterion {number:>2} PASS  {title}: {out.detail}"

    return run


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
