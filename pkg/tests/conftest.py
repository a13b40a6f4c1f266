import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("qflow", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qflow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_q(rng, *shape, scale=1.0):
    """Packed Q-tensors with entries uniform in [-scale, scale]."""
    return rng.uniform(-scale, scale, size=(5,) + shape)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
