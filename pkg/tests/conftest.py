import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sfann.metric import PointSet

settings.register_profile(
    "sfann", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("sfann")


def random_points(rng, n, dim, scale=1.0):
    """Distinct points with a random mix of uniform and clustered structure."""
    while True:
        X = rng.random((n, dim)) * scale
        if rng.random() < 0.5 and n > 4:
            centers = rng.random((max(1, n // 5), dim)) * scale * 100
            X = centers[rng.integers(0, centers.shape[0], n)] + X * 1e-3
        if np.unique(X, axis=0).shape[0] == n:
            return PointSet(X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line4():
    return PointSet(np.array([[0.0], [10.0], [4.0], [7.0]]))


# lines appended by the acceptance suite, echoed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
