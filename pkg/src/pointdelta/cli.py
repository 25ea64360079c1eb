"""Command-line runner: ``pointdelta run <scenario.yaml> --out DIR``.

Each task writes its own files into the output directory; manifest.json
records the status of every task.  Exit status is 0 when all tasks succeed,
2 when any task fails (the files of the other tasks are kept) and 1 when
the scenario itself cannot be read.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
import warnings

import click
import numpy as np

from . import __version__
from .bounds import (BoundConstants, DegenerateFormulaError, analytic_bound_for, certified_lower_bound_numeric,
                     default_cache_path, default_constants, gershgorin_certificate)
from .perturb import OutOfRegimeWarning, compare_with_exact
from .principal import assemble
from .properties import run_suite
from .rgflow import beta, flow_table, scheme_for, solve_renormalized
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .spectral import eigensystem, scan_window, solve_spectrum
from .wavefield import (InsufficientRangeError, build_wavefield, decay_rate_fit, drop_near_centers, l2_norm_state,
                        polar_grid)

__all__ = ["main", "run", "parse_scenario"]

log = logging.getLogger(__name__)


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class _Writer:
    def __init__(self, out_dir: str, fmt: str):
        self.out_dir, self.fmt = out_dir, fmt
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name):
        return os.path.join(self.out_dir, name)

    def table(self, stem: str, header: list, rows: list) -> str:
        if self.fmt == "json":
            name = stem + ".json"
            data = [dict(zip(header, (_plain(v) for v in r))) for r in rows]
            self.json(name, data)
            return name
        name = stem + ".csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        return name

    def json(self, name: str, data) -> str:
        with open(self._path(name), "w", encoding="utf-8", newline="") as fh:
            json.dump(data, fh, indent=2, allow_nan=True)
            fh.write("\n")
        return name


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


# ---------------------------------------------------------------- tasks

def _coord_names(m):
    if m.kind == "sphere":
        return ["theta", "phi"]
    return [f"x{i + 1}" for i in range(m.dim)]


def task_spectrum(sc: Scenario, p: dict, w: _Writer, workers):
    m, cs, es = sc.manifold, sc.centers, sc.units.energy_scale
    states = solve_spectrum(m, cs, sc.quad, p["root_tol"], workers)
    header = ["state", "branch", "nu", "energy", "omega_slope", "norm_factor"] + [f"a{i + 1}" for i in range(cs.n)]
    rows = [[i, s.branch_index, s.nu, es * s.energy, s.omega_slope, s.norm_factor] + list(s.amplitudes)
            for i, s in enumerate(states)]
    files = [w.table("spectrum", header, rows)]
    lo, hi, _ = scan_window(cs, m)
    nu_min = p["nu_min"] or max(lo, 0.05 * min(cs.mus))
    nu_max = p["nu_max"] or hi
    grid = np.geomspace(nu_min, nu_max, int(p["branch_grid"]))
    brows = []
    for nu in grid:
        ev = eigensystem(assemble(m, cs, float(nu), sc.quad, workers)).eigenvalues
        brows.append([float(nu)] + list(ev))
    files.append(w.table("eigenbranches", ["nu"] + [f"omega{k + 1}" for k in range(cs.n)], brows))
    return files, {"n_states": len(states)}


def task_wavefield(sc: Scenario, p: dict, w: _Writer, workers):
    m, cs = sc.manifold, sc.centers
    states = solve_spectrum(m, cs, sc.quad, 1e-10, workers)
    k = int(p["state"])
    if not 0 <= k < len(states):
        raise ValueError(f"state {k} requested, {len(states)} bound states found")
    bs = states[k]
    pts = drop_near_centers(m, cs, polar_grid(m, cs, int(p["n_r"]), int(p["n_ang"]), p["r_max"]))
    field = build_wavefield(m, cs, bs, pts, sc.quad, grid_spec={"n_r": p["n_r"], "n_ang": p["n_ang"]})
    header = _coord_names(m) + ["d_min", "psi"]
    rows = [list(pt) + [dm, v] for pt, dm, v in zip(field.points, field.d_min, field.psi)]
    files = [w.table("wavefield", header, rows)]
    summary = {"state": k, "nu": bs.nu, "energy": sc.units.energy_scale * bs.energy}
    if p["norm"]:
        summary["l2_norm"] = l2_norm_state(m, cs, bs, sc.quad)
    if not m.is_compact:
        try:
            summary["decay_rate"] = decay_rate_fit(field)
        except InsufficientRangeError as exc:
            summary["decay_rate"] = None
            summary["decay_rate_note"] = str(exc)
    files.append(w.json("wavefield_summary.json", _plain(summary)))
    return files, summary


def task_bounds(sc: Scenario, p: dict, w: _Writer, workers):
    m, cs, es = sc.manifold, sc.centers, sc.units.energy_scale
    out = {"geometry": m.label}
    cert = certified_lower_bound_numeric(m, cs, sc.quad)
    ok, margins = gershgorin_certificate(m, cs, cert.nu_star * (1.0 + 1e-6), sc.quad)
    out["gershgorin"] = {"method": cert.method, "nu_star": cert.nu_star, "E_star": es * cert.E_star,
                         "dominant_above": bool(ok), "row_margins": [float(v) for v in margins]}
    if p["constants"]:
        consts = BoundConstants.from_dict(p["constants"])
    else:
        consts = default_constants(m, default_cache_path())
    out["constants"] = consts.to_dict()
    try:
        ab = analytic_bound_for(m, cs, consts, p["analytic_form"])
        out["analytic"] = {"method": ab.method, "nu_star": ab.nu_star, "E_star": es * ab.E_star,
                           "details": _plain(ab.details)}
    except (DegenerateFormulaError, ValueError) as exc:
        out["analytic"] = {"error": f"{type(exc).__name__}: {exc}"}
    states = solve_spectrum(m, cs, sc.quad, 1e-10, workers)
    if states:
        out["ground_energy"] = es * states[0].energy
        out["ground_nu"] = states[0].nu
    return [w.json("bounds.json", _plain(out))], {"nu_star": cert.nu_star}


def task_perturbation(sc: Scenario, p: dict, w: _Writer, workers):
    m, cs, es = sc.manifold, sc.centers, sc.units.energy_scale
    ks = p["branches"] if p["branches"] is not None else list(range(cs.n))
    reports = []
    for k in ks:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", OutOfRegimeWarning)
            r = compare_with_exact(m, cs, int(k), sc.quad, p["root_tol"])
        d = r.to_dict()
        d["delta_E"] = es * d["delta_E"]
        d["in_regime"] = not any(issubclass(c.category, OutOfRegimeWarning) for c in caught)
        reports.append(d)
    return [w.json("perturbation.json", _plain(reports))], {"n_reports": len(reports)}


def task_rgflow(sc: Scenario, p: dict, w: _Writer, workers):
    m, cs = sc.manifold, sc.centers
    D = m.dim
    M = float(p["M"]) if p["M"] is not None else math.e * cs.mus[0]
    if p["coupling"] is not None:
        coupling = float(p["coupling"])
    else:
        coupling = scheme_for(m, cs, M, sc.quad).coupling
    rows = [[1.0, coupling, beta(D, coupling)]] + [list(r) for r in flow_table(D, coupling, p["gammas"])]
    files = [w.table("rgflow", ["gamma", "coupling", "beta"], rows)]
    if p["scheme_M"]:
        exact = [s.nu for s in solve_spectrum(m, cs, sc.quad, 1e-10, workers)]
        rrows = []
        for Mv in p["scheme_M"]:
            rg = scheme_for(m, cs, float(Mv), sc.quad)
            roots = solve_renormalized(m, cs, rg, sc.quad)
            for i, (a, b) in enumerate(zip(roots, exact)):
                rrows.append([float(Mv), rg.coupling, i, a, b, a - b])
        files.append(w.table("rgflow_roots", ["M", "coupling", "root", "nu_rg", "nu_mu_scheme", "difference"],
                             rrows))
    return files, {"D": D, "M": M, "coupling": coupling}


def task_properties(sc: Scenario, p: dict, w: _Writer, workers):
    results = run_suite(sc.manifold)
    data = {"geometry": sc.manifold.label, "passed": all(r.passed for r in results),
            "results": [r.to_dict() for r in results]}
    if not data["passed"]:
        failed = [r.name for r in results if not r.passed]
        w.json("properties.json", data)
        raise RuntimeError(f"heat-kernel properties failed: {', '.join(failed)}")
    return [w.json("properties.json", data)], {"passed": True}


TASKS = {
    "spectrum": task_spectrum,
    "wavefield": task_wavefield,
    "bounds": task_bounds,
    "perturbation": task_perturbation,
    "rgflow": task_rgflow,
    "properties": task_properties,
}


def run(sc: Scenario, out_dir: str, threads: int = 1, fmt: str = "csv", check_only: bool = False) -> int:
    """Run every task of the scenario; returns the exit status."""
    w = _Writer(out_dir, fmt)
    workers = threads if threads and threads > 1 else None
    tasks = [t for t in sc.tasks if t.kind == "properties"] if check_only else list(sc.tasks)
    if check_only and not tasks:
        from .scenario import Task
        tasks = [Task("properties", {})]
    entries = []
    failed = False
    for t in tasks:
        entry = {"task": t.kind, "params": _plain(t.params)}
        try:
            files, summary = TASKS[t.kind](sc, t.params, w, workers)
            entry.update(status="ok", files=files, summary=_plain(summary))
        except Exception as exc:  # recorded per task, the run continues
            log.exception("task %s failed", t.kind)
            failed = True
            entry.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        entries.append(entry)
    code = 2 if failed else 0
    manifest = {
        "scenario": sc.name,
        "geometry": sc.manifold.label,
        "units": "natural" if sc.units.natural else {"hbar": sc.units.hbar, "mass": sc.units.mass},
        "version": __version__,
        "tasks": entries,
        "exit_code": code,
    }
    w.json("manifest.json", _plain(manifest))
    return code


@click.group()
@click.version_option(__version__)
def main():
    """Bound states of renormalized point interactions on curved spaces."""


@main.command("run")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default=None, help="Output directory (default: ./out/<scenario name>).")
@click.option("--threads", default=1, show_default=True, type=click.IntRange(min=1),
              help="Worker threads for matrix assembly.")
@click.option("--check", "check_only", is_flag=True, help="Run only the heat-kernel property suite.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True,
              help="Format of the tabular outputs.")
@click.option("-v", "--verbose", is_flag=True)
def run_cmd(scenario_file, out_dir, threads, check_only, fmt, verbose):
    """Run the tasks of SCENARIO_FILE."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        sc = load_scenario(scenario_file)
    except ScenarioError as exc:
        click.echo(f"error: {scenario_file}: {exc}", err=True)
        sys.exit(1)
    out_dir = out_dir or os.path.join("out", sc.name)
    code = run(sc, out_dir, threads, fmt, check_only)
    click.echo(f"{sc.name}: {'ok' if code == 0 else 'task failures, see manifest.json'} -> {out_dir}")
    sys.exit(code)


@main.command("validate")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
def validate_cmd(scenario_file):
    """Parse and validate SCENARIO_FILE without running it."""
    try:
        sc = load_scenario(scenario_file)
    except ScenarioError as exc:
        click.echo(f"error: {scenario_file}: {exc}", err=True)
        sys.exit(1)
    click.echo(f"{sc.name}: {sc.manifold.label}, {sc.centers.n} centers, "
               f"tasks: {', '.join(t.kind for t in sc.tasks)}")


if __name__ == "__main__":
    main()
