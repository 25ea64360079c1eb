import os
import subprocess
import sys

import numpy as np
import pytest

from pointdelta import _kernels
from pointdelta._accel import HAS_NUMBA

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")


def _rel(a, b):
    live = np.abs(b) > 1e-300
    assert np.array_equal(live, np.abs(a) > 1e-300)
    return float(np.max(np.abs(a - b)[live] / np.abs(b[live])))


@needs_numba
@pytest.mark.parametrize("theta", [0.0, 0.4, 1.7, np.pi])
@pytest.mark.parametrize("fluct", [False, True])
def test_sphere_backends_agree(theta, fluct):
    t = np.geomspace(2e-4, 20.0, 60)
    a = _kernels.sphere_unit(t, theta, fluct, "numba")
    b = _kernels.sphere_unit(t, theta, fluct, "numpy")
    assert _rel(a, b) <= 1e-13


@needs_numba
@pytest.mark.parametrize("rho", [0.0, 0.3, 2.0, 6.0])
def test_hyperbolic_plane_backends_agree(rho):
    t = np.geomspace(1e-3, 30.0, 60)
    assert _rel(_kernels.hyperbolic2_unit(t, rho, "numba"), _kernels.hyperbolic2_unit(t, rho, "numpy")) <= 1e-13


def test_env_switch_selects_numpy():
    env = dict(os.environ, POINTDELTA_NO_NUMBA="1")
    code = "import pointdelta; print(pointdelta.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_default_backend():
    assert _kernels.BACKEND == ("numba" if HAS_NUMBA else "numpy")
