import pytest

from qsmc import Envelope, QsmcLaw, SurfaceSpec, binomial_surface, builtin

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""
    def record(label, passed, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
        assert passed, f"{label}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


EX1_ENV = Envelope(4.0, 0.05, 3.0, 0.1)
EX2_ENV = Envelope(5.0, 0.05, 3.0, 0.1)


@pytest.fixture(scope="session")
def pendulum():
    return builtin("pendulum")


@pytest.fixture(scope="session")
def example2():
    return builtin("example2")


@pytest.fixture(scope="session")
def ex1_law():
    return QsmcLaw(EX1_ENV, binomial_surface(2, 2.0))


@pytest.fixture(scope="session")
def ex2_literal_law():
    return QsmcLaw(EX2_ENV, SurfaceSpec((6.0, 12.0, 8.0, 1.0)))


@pytest.fixture(scope="session")
def ex2_binomial_law():
    return QsmcLaw(EX2_ENV, binomial_surface(4, 2.0))
