import sys
from importlib.resources import files
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spgverify.formats import parse_grammar, parse_machine, parse_property  # noqa: E402

DATA = files("spgverify") / "data"


def load(name):
    text = (DATA / name).read_text()
    if name.endswith(".grammar"):
        return parse_grammar(text)
    if name.endswith(".machine"):
        return parse_machine(text)
    return parse_property(text)


@pytest.fixture
def data_dir():
    return Path(str(DATA))


@pytest.fixture(scope="session")
def split():
    return load("split.grammar")


@pytest.fixture(scope="session")
def semaphore_grammar():
    return load("split_marked.grammar")


@pytest.fixture(scope="session")
def machine():
    return load("three_state.machine")


@pytest.fixture(scope="session")
def meet():
    return load("meet.prop")


@pytest.fixture(scope="session")
def both_critical():
    return load("semaphore.prop")


# lines recorded by the acceptance suite, repeated in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
