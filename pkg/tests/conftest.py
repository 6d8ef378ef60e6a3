import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from finite_dirichlet import GroundSet, SymForm  # noqa: E402

ACCEPTANCE_LINES: list = []


def two_point():
    return SymForm(GroundSet(("a", "b")), [[1.0, -1.0], [-1.0, 1.0]])


def singleton_kill():
    return SymForm(GroundSet(("a",)), [[1.0]])


def non_markov_2():
    return SymForm(GroundSet(("a", "b")), [[1.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def jump2():
    return two_point()


@pytest.fixture
def kill1():
    return singleton_kill()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
