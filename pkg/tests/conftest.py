import pytest

from evoturing import (
    AlgorithmSpec,
    BitFlip,
    BitStringRep,
    OneMaxMin,
    PermutationRep,
    SwapMutation,
    Tournament,
    TspTour,
)

TSP4 = TspTour(((0, 1, 2, 9), (1, 0, 9, 2), (2, 9, 0, 1), (9, 2, 1, 0)))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def tsp4():
    return TSP4


@pytest.fixture
def onemax_spec():
    return AlgorithmSpec(BitStringRep(10), 20, BitFlip(0.1), Tournament(2, elitism=True), OneMaxMin(10))


@pytest.fixture
def tsp_spec():
    return AlgorithmSpec(PermutationRep(4), 8, SwapMutation(0.25), Tournament(2, elitism=True), TSP4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
