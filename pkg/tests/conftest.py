
import pytest

from hardyspec.logradial import build_grid
from hardyspec.weightcore import (bump_profile, canonical_bump, constant_profile,
                                  counterexample_profile, square_wave)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_grid():
    return build_grid(-30.0, 30.0, 6001)


@pytest.fixture(scope="session")
def one():
    return constant_profile(1.0)


@pytest.fixture(scope="session")
def zero():
    return constant_profile(0.0, require_positive=False)


@pytest.fixture(scope="session")
def bump():
    return bump_profile()


@pytest.fixture(scope="session")
def counterexample():
    return counterexample_profile()


@pytest.fixture(scope="session")
def square():
    return square_wave()


@pytest.fixture(scope="session")
def cbump():
    return canonical_bump()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].strip("C:"))):
            terminalreporter.write_line(line)
