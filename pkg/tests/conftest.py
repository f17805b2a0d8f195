import contextlib

import pytest

RESULTS = {}


@contextlib.contextmanager
def _record(number, title):
    try:
        yield
    except BaseException as exc:
        RESULTS[number] = (False, title, f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        print(f"\nCRITERION {number} FAIL  {title}")
        raise
    if number not in RESULTS:
        RESULTS[number] = (True, title, "")
    print(f"\nCRITERION {number} PASS  {title}")


@pytest.fixture
def criterion():
    """Context manager that records one acceptance criterion's outcome."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, title, why = RESULTS[n]
        line = f"CRITERION {n:>2} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{why[:120]}]" if why else ""))
