import os

import numpy as np
import pytest

from locfda import FunctionalSample, GroupLabels, TimeGrid

ACCEPTANCE_LINES = []


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once with the compiled kernels and once with the numpy fallback."""
    monkeypatch.setenv("LOCFDA_DISABLE_NUMBA", "1" if request.param == "numpy" else "0")
    return request.param


def constants(levels, m=3):
    grid = TimeGrid.equispaced(m)
    return FunctionalSample(grid, np.repeat(np.asarray(levels, float)[:, None], m, axis=1))


def random_panel(rng, n, m, integer=False):
    """Random panel; integer values force many distance ties."""
    grid = TimeGrid(np.sort(rng.choice(np.linspace(0, 1, 50), size=m, replace=False)))
    vals = rng.integers(-3, 4, (n, m)).astype(float) if integer else rng.normal(size=(n, m))
    return FunctionalSample(grid, vals)


def two_group_panel(rng, n_per=6, m=5, integer=False):
    vals = rng.integers(-2, 3, (2 * n_per, m)).astype(float) if integer else rng.normal(size=(2 * n_per, m))
    vals[n_per:] += rng.uniform(0, 2)
    labels = GroupLabels(np.repeat([1, 2], n_per))
    return FunctionalSample(TimeGrid.equispaced(m), vals), labels


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


os.environ.setdefault("LOCFDA_OUTPUT_DIR", os.path.join(os.path.dirname(__file__), "..", ".locfda_test_out"))
