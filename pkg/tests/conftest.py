import numpy as np
import pytest

from dqnpower.radio import build_scenario


@pytest.fixture(scope="session")
def paper():
    return build_scenario(seed=1)


@pytest.fixture(scope="session")
def noiseless():
    return build_scenario(seed=1, sigma_divisor=np.inf)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one summary line per acceptance criterion."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
