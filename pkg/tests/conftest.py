import numpy as np
import pytest

from wnslab.grid import Grid


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32, 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _record(cid: str, ok: bool, detail: str) -> bool:
        line = f"[{cid}] {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s[2:s.index("]")])):
            terminalreporter.write_line(line)
