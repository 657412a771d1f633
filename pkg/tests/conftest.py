import math

import numpy as np
import pytest

from duelbench import PreferenceMatrix, generate_cycle


def binomial_band(p: float, n: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(p * (1 - p) / n)


@pytest.fixture(scope="session")
def cycle():
    return generate_cycle(19, 0.51, 1.0)


@pytest.fixture(scope="session")
def cycle2():
    return generate_cycle(19, 0.6, 0.51)


def copeland_matrix() -> PreferenceMatrix:
    """Six rankers, no Condorcet winner, Copeland winners 0 and 1."""
    p = np.full((6, 6), 0.5)

    def s(i, j, v):
        p[i, j] = v
        p[j, i] = 1 - v

    s(0, 1, 0.7)
    for j in (2, 3, 4):
        s(0, j, 0.8)
    s(5, 0, 0.6)
    for j in (2, 3, 4, 5):
        s(1, j, 0.8)
    s(2, 3, 0.6)
    s(3, 4, 0.6)
    s(4, 2, 0.6)
    for j in (2, 3, 4):
        s(j, 5, 0.8)
    return PreferenceMatrix(p)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
