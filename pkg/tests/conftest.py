from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from aer.asymptotics import build_cumulative, build_solution
from aer.examples import EXAMPLES

settings.register_profile(
    "aer",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("aer")

# lines reported by the acceptance suite, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ex1_solution():
    ex = EXAMPLES[1]
    src = build_cumulative(ex.f)
    return build_solution(ex.setup, src), src


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
