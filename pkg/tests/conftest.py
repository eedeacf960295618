import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ehzcap.geometry import HPolytope, make_box, make_cross_polytope, make_cube, make_simplex

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# lines collected by the acceptance gate, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def square():
    return make_cube(1, 1.0)


def unit_square():
    return make_box([0.0, 0.0], [1.0, 1.0])


def triangle():
    return HPolytope.from_arrays([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0])


FIXTURES_2D = {"square": square, "unit_square": unit_square, "triangle": triangle}
FIXTURES_4D = {
    "cube4": lambda: make_cube(2, 1.0),
    "simplex4": lambda: make_simplex(2),
}
CROSS4 = lambda: make_cross_polytope(2, 1.0)  # noqa: E731

# capacities fixed by hand or by the area formula, not by the solver
KNOWN = {"square": 4.0, "unit_square": 1.0, "triangle": 0.5, "cube4": 4.0}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
