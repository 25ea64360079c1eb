"""Special functions and the elementary inequalities used by the bound estimates.

K_0 and K_1 come from scipy.special (Cephes rational/Chebyshev fits);
K_1/2, the Bessel upper bounds, the Lambert W principal branch and the
Legendre recurrence are written out here.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp


class SpecialFunctionDomainError(ValueError):
    """Argument outside the domain of a special function."""


_INV_E = math.exp(-1.0)


def _positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise SpecialFunctionDomainError(f"{name} must be finite and > 0, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def bessel_k(order, x):
    """Modified Bessel function of the second kind for order 0, 1 or 1/2.

    Arguments above ~700 underflow to 0 rather than raising.
    """
    arr = _positive(x)
    if order == 0:
        val = _sp.k0(arr)
    elif order == 1:
        val = _sp.k1(arr)
    elif order == 0.5:
        with np.errstate(under="ignore"):
            val = np.sqrt(np.pi / (2.0 * arr)) * np.exp(-arr)
    else:
        raise SpecialFunctionDomainError(f"unsupported order {order!r}; use 0, 1 or 0.5")
    return _out(val)


def bessel_bound(kind: str, x):
    """Elementary upper bounds on K_0 and K_1.

    k0_coarse: (2/x) e^{-x/2}
    k0_sharp:  e^{-x/2} [2/(1+x) + ln((x+1)/x)]
    k1:        e^{-x/2} (1/x + 1/2)
    """
    arr = _positive(x)
    with np.errstate(under="ignore"):
        h = np.exp(-0.5 * arr)
        if kind == "k0_coarse":
            val = 2.0 / arr * h
        elif kind == "k0_sharp":
            val = h * (2.0 / (1.0 + arr) + np.log1p(1.0 / arr))
        elif kind == "k1":
            val = h * (1.0 / arr + 0.5)
        else:
            raise SpecialFunctionDomainError(f"unknown bound kind {kind!r}")
    return _out(val)


def _w0_guess(x):
    g = np.empty_like(x)
    near = x < -0.25
    p = np.sqrt(np.maximum(2.0 * (math.e * x[near] + 1.0), 0.0))
    g[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    mid = (~near) & (x < 3.0)
    g[mid] = np.log1p(x[mid])
    big = x >= 3.0
    l1 = np.log(x[big])
    l2 = np.log(l1)
    g[big] = l1 - l2 + l2 / l1
    return g


def lambert_w0(x):
    """Principal branch W_0 of the Lambert W function, w e^w = x, x >= -1/e.

    Halley iteration from a branch-point / logarithmic seed.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if not np.all(np.isfinite(arr)):
        raise SpecialFunctionDomainError("lambert_w0 needs finite arguments")
    # allow rounding of -1/e itself
    if np.any(arr < -_INV_E * (1.0 + 4e-16)):
        raise SpecialFunctionDomainError(f"lambert_w0 needs x >= -1/e, got {x!r}")
    arr = np.maximum(arr, -_INV_E)
    w = _w0_guess(arr)
    at_branch = arr <= -_INV_E
    w[at_branch] = -1.0
    active = ~at_branch & (arr != 0.0)
    w[arr == 0.0] = 0.0
    for _ in range(50):
        if not np.any(active):
            break
        wa = w[active]
        xa = arr[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        step = np.where(denom != 0.0, f / np.where(denom != 0.0, denom, 1.0), 0.0)
        wn = np.maximum(wa - step, -1.0)
        w[active] = wn
        done = np.abs(wn - wa) <= 1e-14 * (1.0 + np.abs(wn))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return float(w[0]) if np.ndim(x) == 0 else w


def legendre_p(l: int, x):
    """Legendre polynomial P_l(x) by the three-term recurrence, 0 <= l <= 10000.

    Degrees above 1000 accumulate in long double.
    """
    if int(l) != l or l < 0 or l > 10000:
        raise SpecialFunctionDomainError(f"degree must be an integer in [0, 10000], got {l!r}")
    l = int(l)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(np.abs(xa) > 1.0):
        raise SpecialFunctionDomainError("legendre_p needs |x| <= 1")
    dt = np.longdouble if l > 1000 else np.float64
    xx = xa.astype(dt)
    p0 = np.ones_like(xx)
    if l == 0:
        return _out(p0.astype(float))
    p1 = xx.copy()
    for n in range(1, l):
        p0, p1 = p1, ((2 * n + 1) * xx * p1 - n * p0) / (n + 1)
    return _out(np.clip(p1.astype(float), -1.0, 1.0))
