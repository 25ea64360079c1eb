import glob
import math
import os

import pytest

from pointdelta.scenario import (TASK_DEFAULTS, ScenarioError, from_mapping, load_scenario, parse_scenario,
                                 serialize_scenario, to_mapping)

from conftest import ROOT

SCENARIOS = sorted(glob.glob(os.path.join(ROOT, "scenarios", "*.yaml")))

BASIC = """
manifold: flat3
centers:
  - {point: [0, 0, 0], mu: 1.0}
  - {point: [1, 0, 0], mu: 2.0}
tasks:
  - spectrum
  - {task: bounds, analytic_form: literal}
"""


def test_scenarios_present():
    assert len(SCENARIOS) >= 10


@pytest.mark.parametrize("path", SCENARIOS, ids=os.path.basename)
def test_shipped_scenarios_round_trip(path):
    sc = load_scenario(path)
    assert sc.name == os.path.splitext(os.path.basename(path))[0]
    again = parse_scenario(serialize_scenario(sc))
    assert again.manifold == sc.manifold
    assert again.centers.points == sc.centers.points
    assert again.centers.mus == pytest.approx(sc.centers.mus, rel=1e-15)
    assert again.tasks == sc.tasks
    assert again.quad == sc.quad
    assert to_mapping(again) == to_mapping(sc)


def test_defaults_filled():
    sc = parse_scenario(BASIC, "basic")
    assert sc.name == "basic"
    assert sc.tasks[0].params == TASK_DEFAULTS["spectrum"]
    assert sc.tasks[1].params["analytic_form"] == "literal"
    assert sc.tasks[1].params["constants"] is None
    assert sc.units.natural and sc.units.energy_scale == 1.0


def test_physical_units():
    doc = {"manifold": "flat3", "units": {"hbar": 2.0, "mass": 0.5},
           "centers": [{"point": [0, 0, 0], "binding_energy": 16.0}], "tasks": ["spectrum"]}
    sc = from_mapping(doc)
    # hbar^2/2m = 4, so mu = sqrt(16/4)
    assert sc.units.energy_scale == 4.0
    assert sc.centers.mus == (2.0,)


def _err(text):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    return str(info.value)


def test_invalid_sphere_point_is_located():
    msg = _err("manifold: sphere\ncenters:\n  - {point: [4.0, 0.0], mu: 1.0}\ntasks: [spectrum]\n")
    assert msg.startswith("centers[0].point")
    assert "4.0" in msg or "theta" in msg


def test_parse_error_has_line_and_column():
    msg = _err("manifold: flat3\ncenters: [\n  {point: [0, 0, 0], mu: 1.0\ntasks: [spectrum]\n")
    assert "line" in msg and "column" in msg


@pytest.mark.parametrize("text,where", [
    ("manifold: torus\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [spectrum]", "manifold"),
    ("manifold: flat2\nradius: 2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [spectrum]", "radius"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [spectrum, spectrum]", "tasks[1]"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [{task: bounds, colour: red}]", "tasks[0].colour"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [fly]", "tasks[0]"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: []", "tasks"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\ntasks: [spectrum]\nextra: 1", "extra"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: -1}]\ntasks: [spectrum]", "centers[0].mu"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1, spin: 2}]\ntasks: [spectrum]", "centers[0].spin"),
    ("manifold: flat2\ncenters: [{point: [0, 0], binding_energy: 1}]\ntasks: [spectrum]", "centers[0].binding"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}, {point: [0, 0], mu: 2}]\ntasks: [spectrum]", "centers"),
    ("manifold: flat2\ncenters: []\ntasks: [spectrum]", "centers"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\nunits: imperial\ntasks: [spectrum]", "units"),
    ("manifold: flat2\ncenters: [{point: [0, 0], mu: 1}]\nquadrature: {rel_tol: 0.1}\ntasks: [spectrum]",
     "quadrature"),
    ("manifold: hyperbolic2\nkappa: -1\ncenters: [{point: [0, 1], mu: 1}]\ntasks: [spectrum]", "kappa"),
    ("- just\n- a list\n", "mapping"),
])
def test_errors_name_the_key(text, where):
    assert where in _err(text)


def test_sphere_radius_and_kappa():
    sc = parse_scenario("manifold: sphere\nradius: 2.0\ncenters: [{point: [1.0, 0.5], mu: 1}]\ntasks: [spectrum]")
    assert sc.manifold.volume == pytest.approx(16 * math.pi)
    sc = parse_scenario("manifold: hyperbolic3\nkappa: 0.5\ncenters: [{point: [0, 0, 1], mu: 1}]\ntasks: [bounds]")
    assert sc.manifold.spectral_bottom == pytest.approx(0.25)
