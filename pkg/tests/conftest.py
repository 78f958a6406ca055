import numpy as np
import pytest

from idlab import GaussianDistribution, Laplace1D, ProductDistribution, stream

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion after the test summary."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    """Fresh deterministic generator; same stream in every test that asks."""
    return stream(20240817, 0)


@pytest.fixture
def gauss2():
    return GaussianDistribution([0.5, -1.0], [[2.0, 0.6], [0.6, 1.0]])


@pytest.fixture
def laplace_product():
    return ProductDistribution([Laplace1D(0.0, 1.0), Laplace1D(0.3, 1.3)])


def probe_grid(dim, half_width=3.0, per_axis=7):
    """Small cartesian grid used as deterministic probe points."""
    axes = [np.linspace(-half_width, half_width, per_axis)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)
