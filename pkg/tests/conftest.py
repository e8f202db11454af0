import zlib

import numpy as np
import pytest

from hyperlap import Hypergraph

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, ok: bool, detail: str) -> None:
    """Print one PASS/FAIL line now and again in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def four_vertex():
    """One unit-weight edge covering four vertices."""
    return Hypergraph(4, [[0, 1, 2, 3]])


@pytest.fixture
def rng(request):
    # seeded per test so failures reproduce in isolation
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))
