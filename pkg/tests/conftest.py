import sys
from pathlib import Path

import pytest

from picky.grammar import read_grammar
from picky.models import Models
from picky.treebank import extract_events, load_treebank

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))


def train_on(trees, grammar):
    return Models.train([ev for t in trees for ev in extract_events(t, grammar)], grammar)


@pytest.fixture(scope="session")
def fixtures():
    return FIXTURES


@pytest.fixture(scope="session")
def g0():
    return read_grammar(FIXTURES / "g0.grammar")


@pytest.fixture(scope="session")
def c0():
    return load_treebank(FIXTURES / "c0.trees")


@pytest.fixture(scope="session")
def m0(g0, c0):
    return train_on(c0, g0)


@pytest.fixture(scope="session")
def directions():
    grammar = read_grammar(FIXTURES / "directions.grammar")
    trees = load_treebank(FIXTURES / "directions.trees")
    return grammar, trees, train_on(trees, grammar)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
