import pytest

from bfmd.instances import canonical_instance

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def i0():
    return canonical_instance()


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; also echoed in the terminal summary."""
    def record(n, ok, detail=""):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
        print(line)
        _ACCEPTANCE.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
