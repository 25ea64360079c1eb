"""Time the numba and numpy versions of the curved-space heat kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called through the same dispatchers on the same inputs;
the script also reports the largest relative difference between them.
"""
import argparse
import time

import numpy as np

from pointdelta import _kernels
from pointdelta._accel import HAS_NUMBA


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


CASES = {
    "sphere series (t >= 0.5)": lambda be: _kernels.sphere_unit(np.geomspace(0.5, 20.0, 400), 1.1, False, be),
    "sphere images (t < 0.5)": lambda be: _kernels.sphere_unit(np.geomspace(1e-4, 0.49, 400), 1.1, False, be),
    "hyperbolic plane": lambda be: _kernels.hyperbolic2_unit(np.geomspace(1e-3, 20.0, 400), 1.3, be),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable (or POINTDELTA_NO_NUMBA set): timing numpy only")
    print(f"{'kernel':28s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, call in CASES.items():
        t_np, v_np = _time(lambda: call("numpy"), args.repeat)
        if HAS_NUMBA:
            call("numba")  # compile outside the timed region
            t_nb, v_nb = _time(lambda: call("numba"), args.repeat)
            live = np.abs(v_np) > 1e-300
            diff = float(np.max(np.abs(v_nb - v_np)[live] / np.abs(v_np[live])))
            print(f"{name:28s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.1f} {diff:13.2e}")
        else:
            print(f"{name:28s} {1e3 * t_np:11.3f} {'-':>11s} {'-':>8s} {'-':>13s}")


if __name__ == "__main__":
    main()
