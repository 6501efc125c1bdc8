import numpy as np
import pytest

from trimetric.game import NormalFormGame

ACCEPTANCE_RESULTS = []


def prisoners_dilemma():
    # actions (C, D); CC=(3,3) CD=(0,5) DC=(5,0) DD=(1,1)
    return NormalFormGame.bimatrix([[3, 0], [5, 1]], [[3, 5], [0, 1]])


def matching_pennies():
    # player 1 wants to match, player 2 to mismatch
    a = np.array([[1, -1], [-1, 1]])
    return NormalFormGame.bimatrix(a, -a)


def rock_paper_scissors():
    a = np.array([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
    return NormalFormGame.bimatrix(a, -a)


@pytest.fixture
def pd():
    return prisoners_dilemma()


@pytest.fixture
def mp():
    return matching_pennies()


@pytest.fixture
def rps():
    return rock_paper_scissors()


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the terminal summary."""
    label = request.node.get_closest_marker("criterion").args[0]
    yield
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    ACCEPTANCE_RESULTS.append((label, passed))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    if rep.when == "call":
        item.rep_call = rep
    return rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
