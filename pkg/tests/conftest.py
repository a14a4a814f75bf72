from pathlib import Path

import pytest

from mvcheck.dsl import parse_history

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

H0_TEXT = "r1(x,0) c1"
H1_TEXT = "r1(x,0) w2(x,10) w2(y,10) c2 r1(y,0) c1"
H2_TEXT = "r1(x,0) r2(z,0) r3(z,0) w1(x,5) c1 r2(x,5) w2(x,10) w2(y,15) c2 r3(x,5) w3(y,25) c3"
H3_TEXT = "w1(x,5) c1 r2(x,0) c2"
H4_TEXT = "r2(x,0) w1(x,5) c1 c2"

H1_WORKLOAD = """\
begin 1
r 1 x
begin 2
w 2 x 10
w 2 y 10
tryc 2
r 1 y
tryc 1
"""


def hist(text):
    return parse_history(text)


@pytest.fixture
def H0():
    return hist(H0_TEXT)


@pytest.fixture
def H1():
    return hist(H1_TEXT)


@pytest.fixture
def H2():
    return hist(H2_TEXT)


@pytest.fixture
def H3():
    return hist(H3_TEXT)


@pytest.fixture
def H4():
    return hist(H4_TEXT)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
