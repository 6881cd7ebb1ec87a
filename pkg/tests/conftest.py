import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "gcr", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("gcr")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, d, jitter=0.5):
    B = rng.standard_normal((d, d + 2))
    return B @ B.T + jitter * np.eye(d)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
