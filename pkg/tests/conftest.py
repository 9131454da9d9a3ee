import numpy as np
import pytest

from nrlab import data


@pytest.fixture(scope="session")
def desk_dict():
    return data.desk_dictionary()


@pytest.fixture(scope="session")
def desk_lex():
    return data.desk_lexicon()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":abc")), s)):
            terminalreporter.write_line(line)
