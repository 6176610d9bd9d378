import pytest

from percolab.graphs import build

SMALL_SPECS = [
    "hypercube:m=1",
    "hypercube:m=4",
    "hypercube:m=7",
    "torus:n=3,d=2",
    "torus:n=5,d=3",
    "hamming:n=2,d=3",
    "hamming:n=4,d=2",
    "complete:n=2",
    "complete:n=9",
    "regular:n=20,m=3,seed=1",
    "regular:n=30,m=4,seed=2",
]


@pytest.fixture(params=SMALL_SPECS)
def small_graph(request):
    return build(request.param)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
