import numpy as np
import pytest
from hypothesis import settings

from nonlocal_parabolic.grid import Grid

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def bump(g, amplitude=1.0, width=0.3):
    x = g.coordinates()
    center = np.array(g.extents) / 2
    prof = np.clip(1 - np.sum(((x - center) / width) ** 2, axis=1), 0, None) ** 2
    return amplitude * prof / prof.max()


@pytest.fixture
def line17():
    return Grid.interval(1.0, 17)


@pytest.fixture
def line33():
    return Grid.interval(1.0, 33)


@pytest.fixture
def rect():
    return Grid.rectangle(1.0, 2.0, 9, 13)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance verdicts, one line per criterion, echoed in the terminal summary
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance")
        for line in VERDICTS:
            terminalreporter.write_line(line)
