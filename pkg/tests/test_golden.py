import csv
import json
import math
import os

import pytest

from pointdelta.cli import run
from pointdelta.scenario import load_scenario

from conftest import GOLDEN, ROOT

NAMES = sorted(os.listdir(GOLDEN))
RTOL, ATOL = 1e-8, 1e-12


def _same(a, b, where):
    if isinstance(a, dict):
        assert isinstance(b, dict) and set(a) == set(b), where
        for k in a:
            _same(a[k], b[k], f"{where}.{k}")
    elif isinstance(a, list):
        assert isinstance(b, list) and len(a) == len(b), where
        for i, (x, y) in enumerate(zip(a, b)):
            _same(x, y, f"{where}[{i}]")
    elif isinstance(a, float) or isinstance(b, float):
        if a is None or b is None:
            assert a is b, where
        elif math.isnan(a):
            assert math.isnan(b), where
        else:
            assert b == pytest.approx(a, rel=RTOL, abs=ATOL), where
    else:
        assert a == b, where


def _read(path):
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = [rows[0]]
    for r in rows[1:]:
        out.append([float(v) if v not in ("true", "false") else v for v in r])
    return out


def test_every_scenario_has_golden():
    scen = sorted(f[:-5] for f in os.listdir(os.path.join(ROOT, "scenarios")) if f.endswith(".yaml"))
    assert scen == NAMES


@pytest.mark.parametrize("name", NAMES)
def test_matches_golden(name, tmp_path):
    sc = load_scenario(os.path.join(ROOT, "scenarios", name + ".yaml"))
    out = str(tmp_path)
    assert run(sc, out) == 0
    want = sorted(os.listdir(os.path.join(GOLDEN, name)))
    assert sorted(os.listdir(out)) == want
    for f in want:
        _same(_read(os.path.join(GOLDEN, name, f)), _read(os.path.join(out, f)), f"{name}/{f}")
