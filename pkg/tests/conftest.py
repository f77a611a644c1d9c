import numpy as np
import pytest

from finslerkit import metrics
from finslerkit.metricfile import fixture_names, fixture_path, load_metric


def load_fixture(name):
    return load_metric(fixture_path(name))[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sphere1():
    return metrics.round_sphere(1.0, 2)


@pytest.fixture(scope="session")
def flat2():
    return metrics.flat(2)


@pytest.fixture(scope="session")
def randers_bump():
    return load_fixture("randers_bump")


@pytest.fixture(scope="session")
def riemann_bump():
    return load_fixture("riemann_bump")


ALL_FIXTURES = fixture_names()
RIEMANNIAN_FIXTURES = [n for n in ALL_FIXTURES if load_fixture(n).is_riemannian]
SPHERE_FIXTURES = [n for n in ALL_FIXTURES if n.startswith("sphere") and "randers" not in n]


def random_elements(spec, rng, count):
    x = spec.sample_points(rng, count)
    y = rng.standard_normal((count, spec.dimension))
    return metrics.LineElement(x, y)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
