"""Scenario documents for the command-line runner.

A scenario is a YAML mapping:

    name: pair-flat3               # optional, defaults to the file stem
    manifold: flat3                # flat2 | flat3 | sphere | hyperbolic2 | hyperbolic3
    radius: 1.0                    # sphere only
    kappa: 1.0                     # hyperbolic only
    units: natural                 # or {hbar: 1.0546e-34, mass: 9.109e-31}
    centers:
      - {point: [0, 0, 0], mu: 1.0}
      - {point: [1, 0, 0], binding_energy: 4.0}   # physical units only
    quadrature: {rel_tol: 1e-10, tail_tol: 1e-16}
    tasks:
      - spectrum
      - {task: bounds, analytic_form: derived}

Task names and their optional keys are listed in TASK_KEYS.  Omitted keys
take the defaults in TASK_DEFAULTS.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .manifold import InvalidPointError, ManifoldSpec
from .principal import CenterSet, CoincidentCentersError
from .quadrature import QuadratureConfig

MANIFOLDS = ("flat2", "flat3", "sphere", "hyperbolic2", "hyperbolic3")

TASK_DEFAULTS = {
    "spectrum": {"root_tol": 1e-10, "branch_grid": 64, "nu_min": None, "nu_max": None},
    "wavefield": {"state": 0, "n_r": 24, "n_ang": 16, "r_max": None, "norm": True},
    "bounds": {"analytic_form": "derived", "constants": None},
    "perturbation": {"branches": None, "root_tol": 1e-10},
    "rgflow": {"M": None, "coupling": None, "gammas": [0.5, 2.0, math.e], "scheme_M": []},
    "properties": {},
}
TASK_KEYS = {k: set(v) for k, v in TASK_DEFAULTS.items()}


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


@dataclass(frozen=True)
class Units:
    natural: bool = True
    hbar: float = 1.0
    mass: float = 0.5

    @property
    def energy_scale(self) -> float:
        """Physical energy per natural unit, hbar^2 / 2m."""
        return self.hbar ** 2 / (2.0 * self.mass)


@dataclass(frozen=True)
class Task:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    manifold: ManifoldSpec
    centers: CenterSet
    units: Units
    tasks: tuple
    quad: QuadratureConfig
    raw: dict = field(repr=False, compare=False, default_factory=dict)


def _manifold_from(doc):
    kind = doc.get("manifold")
    if kind not in MANIFOLDS:
        raise ScenarioError(f"manifold: expected one of {', '.join(MANIFOLDS)}, got {kind!r}")
    if kind.startswith("flat"):
        extra = {"radius", "kappa"} & set(doc)
        if extra:
            raise ScenarioError(f"{sorted(extra)[0]}: not used by {kind}")
        return ManifoldSpec.flat(int(kind[-1]))
    try:
        if kind == "sphere":
            return ManifoldSpec.sphere(float(doc.get("radius", 1.0)))
        return ManifoldSpec.hyperbolic(int(kind[-1]), float(doc.get("kappa", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{'radius' if kind == 'sphere' else 'kappa'}: {exc}") from exc


def _units_from(doc):
    u = doc.get("units", "natural")
    if u == "natural":
        return Units()
    if isinstance(u, dict) and set(u) == {"hbar", "mass"}:
        hbar, mass = float(u["hbar"]), float(u["mass"])
        if not (hbar > 0 and mass > 0):
            raise ScenarioError("units: hbar and mass must be positive")
        return Units(False, hbar, mass)
    raise ScenarioError("units: expected 'natural' or {hbar: ..., mass: ...}")


def _centers_from(doc, m, units):
    raw = doc.get("centers")
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("centers: need a non-empty list")
    pts, mus = [], []
    for i, c in enumerate(raw):
        where = f"centers[{i}]"
        if not isinstance(c, dict) or "point" not in c:
            raise ScenarioError(f"{where}: expected a mapping with 'point'")
        unknown = set(c) - {"point", "mu", "binding_energy"}
        if unknown:
            raise ScenarioError(f"{where}.{sorted(unknown)[0]}: unknown key")
        try:
            p = m.validate_point(c["point"])
        except InvalidPointError as exc:
            raise ScenarioError(f"{where}.point: {exc}") from exc
        if ("mu" in c) == ("binding_energy" in c):
            raise ScenarioError(f"{where}: give exactly one of mu, binding_energy")
        if "mu" in c:
            mu = float(c["mu"])
        else:
            if units.natural:
                raise ScenarioError(f"{where}.binding_energy: only available with physical units")
            mu = math.sqrt(float(c["binding_energy"]) / units.energy_scale)
        if not (mu > 0 and math.isfinite(mu)):
            raise ScenarioError(f"{where}.mu: must be positive")
        pts.append(p)
        mus.append(mu)
    try:
        return CenterSet(tuple(pts), tuple(mus))
    except (CoincidentCentersError, ValueError) as exc:
        raise ScenarioError(f"centers: {exc}") from exc


def _tasks_from(doc):
    raw = doc.get("tasks")
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("tasks: need at least one task")
    out = []
    for i, t in enumerate(raw):
        where = f"tasks[{i}]"
        if isinstance(t, str):
            kind, given = t, {}
        elif isinstance(t, dict) and "task" in t:
            kind = t["task"]
            given = {k: v for k, v in t.items() if k != "task"}
        else:
            raise ScenarioError(f"{where}: expected a task name or a mapping with 'task'")
        if kind not in TASK_DEFAULTS:
            raise ScenarioError(f"{where}: unknown task {kind!r}")
        if any(prev.kind == kind for prev in out):
            raise ScenarioError(f"{where}: task {kind!r} given twice (each task writes its own files)")
        unknown = set(given) - TASK_KEYS[kind]
        if unknown:
            raise ScenarioError(f"{where}.{sorted(unknown)[0]}: unknown key for task {kind}")
        params = copy.deepcopy(TASK_DEFAULTS[kind])
        params.update(given)
        out.append(Task(kind, params))
    return tuple(out)


def _quad_from(doc):
    q = doc.get("quadrature", {}) or {}
    if not isinstance(q, dict):
        raise ScenarioError("quadrature: expected a mapping")
    try:
        return QuadratureConfig(**{k: (int(v) if k == "max_subdivisions" else float(v)) for k, v in q.items()})
    except TypeError as exc:
        raise ScenarioError(f"quadrature: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"quadrature: {exc}") from exc


_TOP_KEYS = {"name", "manifold", "radius", "kappa", "units", "centers", "quadrature", "tasks"}


def from_mapping(doc: dict, default_name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown top-level key")
    m = _manifold_from(doc)
    units = _units_from(doc)
    cs = _centers_from(doc, m, units)
    return Scenario(str(doc.get("name", default_name)), m, cs, units, _tasks_from(doc), _quad_from(doc),
                    copy.deepcopy(doc))


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ScenarioError(f"parse error at {where}: {exc.problem}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error: {exc}") from exc
    return from_mapping(doc, default_name)


def load_scenario(path: str) -> Scenario:
    import os

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, os.path.splitext(os.path.basename(path))[0])


def to_mapping(sc: Scenario) -> dict:
    m = sc.manifold
    doc = {"name": sc.name}
    if m.kind == "flat":
        doc["manifold"] = f"flat{m.dim}"
    elif m.kind == "sphere":
        doc["manifold"], doc["radius"] = "sphere", m.scale
    else:
        doc["manifold"], doc["kappa"] = f"hyperbolic{m.dim}", m.scale
    doc["units"] = "natural" if sc.units.natural else {"hbar": sc.units.hbar, "mass": sc.units.mass}
    doc["centers"] = [{"point": list(p), "mu": u} for p, u in zip(sc.centers.points, sc.centers.mus)]
    q = sc.quad
    doc["quadrature"] = {"rel_tol": q.rel_tol, "split_time": q.split_time, "tail_tol": q.tail_tol,
                         "max_subdivisions": q.max_subdivisions}
    doc["tasks"] = [dict({"task": t.kind}, **t.params) for t in sc.tasks]
    return doc


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(to_mapping(sc), sort_keys=False)
