import math
import os

import pytest

from pointdelta import ManifoldSpec

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# pass/fail lines recorded by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def five_geometries():
    return [ManifoldSpec.flat(2), ManifoldSpec.flat(3), ManifoldSpec.sphere(1.0),
            ManifoldSpec.hyperbolic(2, 1.0), ManifoldSpec.hyperbolic(3, 1.0)]


def pair_points(m, d):
    """Two points at geodesic distance d."""
    if m.kind == "flat":
        return (0.0,) * m.dim, (d,) + (0.0,) * (m.dim - 1)
    if m.kind == "sphere":
        return (0.0, 0.0), (d / m.scale, 0.0)
    origin = (0.0,) * (m.dim - 1) + (1.0,)
    return origin, (0.0,) * (m.dim - 1) + (math.exp(m.scale * d),)


def base_point(m):
    return pair_points(m, 1.0)[0]


@pytest.fixture(params=five_geometries(), ids=lambda m: m.label)
def geometry(request):
    return request.param
