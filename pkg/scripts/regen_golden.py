"""Regenerate the golden fixtures under tests/golden/ from scenarios/*.yaml.

Run after a deliberate change in numerical output, then review the diff:

    python3 scripts/regen_golden.py [scenario-name ...]

Scenarios with a closed-form oracle (the check_* functions below) are
verified against it before their fixtures are written.
"""
import math
import os
import shutil
import sys
import tempfile

from scipy.special import lambertw

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from pointdelta.cli import run  # noqa: E402
from pointdelta.scenario import load_scenario  # noqa: E402

SCEN = os.path.join(ROOT, "scenarios")
GOLD = os.path.join(ROOT, "tests", "golden")


def _csv(path):
    import csv

    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


# independent oracles for scenarios that have one
def check_single_flat2(d):
    _, rows = _csv(os.path.join(d, "spectrum.csv"))
    assert len(rows) == 1 and _close(rows[0][3], -1.0, 1e-8)


def check_pair_flat3(d):
    _, rows = _csv(os.path.join(d, "spectrum.csv"))
    nu = 1.0 + lambertw(math.exp(-1.0)).real
    assert len(rows) == 1 and _close(rows[0][2], nu, 1e-9)
    import json

    b = json.load(open(os.path.join(d, "bounds.json")))
    assert _close(b["gershgorin"]["nu_star"], nu, 1e-8)


def check_tunneling_flat3(d):
    import json

    rep = json.load(open(os.path.join(d, "perturbation.json")))
    assert _close(rep[1]["delta_nu"], math.exp(-8.0) / 4.0, 1e-9)
    assert rep[1]["relative_error"] <= 5e-2


def check_rg_flat2(d):
    _, rows = _csv(os.path.join(d, "rgflow.csv"))
    g = [r for r in rows if _close(r[0], math.e, 1e-15)][0]
    assert _close(g[1], math.pi, 1e-14) and _close(g[2], -math.pi / 2.0, 1e-14)
    _, roots = _csv(os.path.join(d, "rgflow_roots.csv"))
    assert max(abs(r[5]) for r in roots) <= 1e-8


def check_rg_fixed_point(d):
    _, rows = _csv(os.path.join(d, "rgflow.csv"))
    assert all(_close(r[1], 4.0 * math.pi, 1e-12) for r in rows)


def check_physical_flat3(d):
    # hbar = m = 1: energies in units of hbar^2/2m = 1/2, binding energies 0.5 and 2
    _, rows = _csv(os.path.join(d, "spectrum.csv"))
    assert _close(rows[0][3], -2.0, 1e-4) and _close(rows[1][3], -0.5, 1e-3)


CHECKS = {k[len("check_"):]: v for k, v in globals().items() if k.startswith("check_")}


def main(names):
    files = sorted(f for f in os.listdir(SCEN) if f.endswith(".yaml"))
    for f in files:
        name = f[:-5]
        if names and name not in names:
            continue
        sc = load_scenario(os.path.join(SCEN, f))
        tmp = tempfile.mkdtemp()
        code = run(sc, tmp)
        if code != 0:
            raise SystemExit(f"{name}: run failed with exit code {code}")
        if name in CHECKS:
            CHECKS[name](tmp)
        dest = os.path.join(GOLD, name)
        shutil.rmtree(dest, ignore_errors=True)
        shutil.copytree(tmp, dest)
        shutil.rmtree(tmp)
        print(f"{name}: {len(os.listdir(dest))} files")


if __name__ == "__main__":
    main(sys.argv[1:])
