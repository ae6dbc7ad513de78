import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def random_spd(rng, scale=1.0):
    """Random inertia tensor; moments in [1, 2] always satisfy the triangle inequality."""
    Q = random_rotation(rng)
    return scale * (Q @ np.diag(rng.uniform(1.0, 2.0, 3)) @ Q.T)


def random_rotation(rng):
    from deformphase.geom3 import exp_rotation

    return exp_rotation(rng.normal(size=3))


#: one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
