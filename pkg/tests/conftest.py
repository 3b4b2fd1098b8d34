import pytest

from su12hitchin import localmodel, painleve

# Lines recorded by the acceptance checks, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def psol():
    return painleve.default_solution()


@pytest.fixture(scope="session")
def model0():
    return localmodel.solve_local_model(t=1.0, lam=0.0)
