import sys

import pytest

from qbattery.dynamics import integrate
from qbattery.model import ModelParams

# |J| = Gamma / 2 for the default Gamma = 0.5
J_ABS = 0.25


@pytest.fixture(scope="session")
def fig2() -> ModelParams:
    """eps = 0.05, kappa_a = kappa_b = 0.06, Gamma = 0.5, delta = 0, nonreciprocal."""
    return ModelParams(epsilon=0.05, kappa_a=0.06, gamma=0.5)


@pytest.fixture(scope="session")
def fig2_trajectory(fig2):
    return integrate(fig2, 20 / J_ABS)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
