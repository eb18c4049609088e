import numpy as np
import pytest

from qwplane import BiasParams, build_coin

# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (len(s.split()[1]), s)):
            terminalreporter.write_line(line)


@pytest.fixture
def hadamard():
    params = BiasParams(0.5, 1)
    return params, build_coin(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
