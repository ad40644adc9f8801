import numpy as np
import pytest

from odbsample.model import Dataset, FeatureBasis, ModelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def five_points():
    return Dataset(np.array([[-1.0], [-0.8], [0.0], [0.7], [1.0]]))


@pytest.fixture
def linear1():
    return ModelSpec(FeatureBasis.linear(1))


@pytest.fixture
def quad1():
    return ModelSpec(FeatureBasis.quadratic(1))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
