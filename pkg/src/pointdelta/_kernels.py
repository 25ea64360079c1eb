"""Hot heat-kernel loops for the unit sphere and the unit hyperbolic plane.

Every kernel has a numba loop version (``*_nb``) and a vectorized numpy
version (``*_np``).  ``BACKEND`` names the one the public wrappers use;
set POINTDELTA_NO_NUMBA=1 to force numpy.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

BACKEND = "numba" if HAS_NUMBA else "numpy"

# Below this t (unit radius) the sphere uses the image-sum integral,
# above it the Legendre series.
S2_SERIES_T = 0.5

_SQRT2 = math.sqrt(2.0)
_FOUR_PI = 4.0 * math.pi


def _dyadic_rule(levels: int, order: int, two_sided: bool, ratio: float = 2.0):
    """Gauss-Legendre nodes on [0, 1] with panels shrinking geometrically toward 0 (and 1)."""
    x, w = np.polynomial.legendre.leggauss(order)
    if two_sided:
        left = [0.0] + [0.5 * ratio ** -j for j in range(levels, -1, -1)]
        right = [1.0 - e for e in reversed(left[:-1])]
        breaks = np.array(left + right)
    else:
        breaks = np.array([0.0] + [ratio ** -j for j in range(levels, -1, -1)])
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


_S2_NODES, _S2_WEIGHTS = _dyadic_rule(22, 16, True)
_S2_PHI = math.pi * _S2_NODES
_S2_PHI_W = math.pi * _S2_WEIGHTS
_H2_NODES, _H2_WEIGHTS = _dyadic_rule(24, 16, False)


# ---------------------------------------------------------------- sphere series

@njit
def s2_series_nb(t, cth, skip_l0):
    out = np.empty(t.shape[0])
    for n in range(t.shape[0]):
        tn = t[n]
        p0 = 1.0
        p1 = cth
        acc = 0.0 if skip_l0 else 1.0
        l = 1
        while True:
            term = (2 * l + 1) * math.exp(-l * (l + 1) * tn)
            acc += term * p1
            if term < 1e-18:
                break
            p0, p1 = p1, ((2 * l + 1) * cth * p1 - l * p0) / (l + 1)
            l += 1
        out[n] = acc / _FOUR_PI
    return out


def s2_series_np(t, cth, skip_l0):
    t = np.asarray(t, dtype=float)
    lmax = int(math.ceil(math.sqrt(42.0 / t.min()))) + 2
    ps = np.empty(lmax + 1)
    ps[0], ps[1] = 1.0, cth
    for l in range(1, lmax):
        ps[l + 1] = ((2 * l + 1) * cth * ps[l] - l * ps[l - 1]) / (l + 1)
    l = np.arange(lmax + 1, dtype=float)
    terms = (2 * l + 1) * ps
    if skip_l0:
        terms[0] = 0.0
    with np.errstate(under="ignore"):
        ex = np.exp(-np.outer(t, l * (l + 1)))
    return ex @ terms / _FOUR_PI


# ---------------------------------------------------------------- sphere images
#
# K_t(theta) = sqrt2 e^{t/4} / (4 pi t)^{3/2} sum_k (-1)^k
#              int_theta^pi (s + 2 pi k) e^{-(s + 2 pi k)^2 / 4t} / sqrt(cos theta - cos s) ds
# with s = theta + a sin^2(phi/2), a = pi - theta, which removes both
# inverse-square-root endpoints.  The factor e^{-theta^2/4t} is pulled out.

@njit
def s2_image_nb(t, th, phi, wphi):
    a = math.pi - th
    m = phi.shape[0]
    geo = np.empty(m)
    svals = np.empty(m)
    for j in range(m):
        h = 0.5 * phi[j]
        q = math.sin(h) ** 2
        s = th + a * q
        x = th + 0.5 * a * q
        if x <= 0.5 * math.pi:
            r = math.sin(x) / a
        else:
            y = a * (1.0 - 0.5 * q)
            r = (1.0 - 0.5 * q) * (math.sin(y) / y if y > 1e-300 else 1.0)
        y2 = 0.5 * a * q
        s2 = math.sin(y2) / y2 if y2 > 1e-300 else 1.0
        geo[j] = wphi[j] * math.cos(h) / math.sqrt(r * s2)
        svals[j] = s
    out = np.empty(t.shape[0])
    for n in range(t.shape[0]):
        tn = t[n]
        acc = 0.0
        for j in range(m):
            s = svals[j]
            inner = 0.0
            for k in range(-2, 3):
                sk = s + 2.0 * math.pi * k
                ex = -(sk * sk - th * th) / (4.0 * tn)
                if ex > -745.0:
                    sign = 1.0 if k % 2 == 0 else -1.0
                    inner += sign * sk * math.exp(ex)
            acc += geo[j] * inner
        pref = _SQRT2 * math.exp(0.25 * tn - th * th / (4.0 * tn)) / (_FOUR_PI * tn) ** 1.5
        out[n] = pref * acc
    return out


def _s2_geometry_np(th, phi, wphi):
    a = math.pi - th
    h = 0.5 * phi
    q = np.sin(h) ** 2
    s = th + a * q
    x = th + 0.5 * a * q
    y = a * (1.0 - 0.5 * q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_low = np.sin(x) / a if a > 0 else np.zeros_like(x)
        r_high = (1.0 - 0.5 * q) * np.where(y > 1e-300, np.sin(y) / np.where(y > 1e-300, y, 1.0), 1.0)
        r = np.where(x <= 0.5 * math.pi, r_low, r_high)
        y2 = 0.5 * a * q
        s2 = np.where(y2 > 1e-300, np.sin(y2) / np.where(y2 > 1e-300, y2, 1.0), 1.0)
    geo = wphi * np.cos(h) / np.sqrt(r * s2)
    return s, geo


def s2_image_np(t, th, phi, wphi):
    t = np.asarray(t, dtype=float)
    s, geo = _s2_geometry_np(th, phi, wphi)
    inner = np.zeros((t.size, s.size))
    with np.errstate(under="ignore"):
        for k in range(-2, 3):
            sk = s + 2.0 * math.pi * k
            ex = -(sk * sk - th * th)[None, :] / (4.0 * t[:, None])
            inner += (1.0 if k % 2 == 0 else -1.0) * sk[None, :] * np.exp(np.maximum(ex, -745.0)) * (ex > -745.0)
        pref = _SQRT2 * np.exp(0.25 * t - th * th / (4.0 * t)) / (_FOUR_PI * t) ** 1.5
    return pref * (inner @ geo)


# ---------------------------------------------------------------- hyperbolic plane
#
# K_t(rho) = sqrt2 e^{-t/4} / (4 pi t)^{3/2} int_rho^inf s e^{-s^2/4t} / sqrt(cosh s - cosh rho) ds
# with s = rho + w^2; cosh s - cosh rho = 2 sinh((s+rho)/2) sinh(w^2/2).

@njit
def _log_sinh(a):
    if a > 20.0:
        return a - math.log(2.0)
    return math.log(math.sinh(a))


@njit
def _log_shc(y):
    # log(sinh(y)/y)
    if y < 1e-4:
        return y * y / 6.0
    return _log_sinh(y) - math.log(y)


@njit
def _h2_upper(tn, rho):
    b = rho / (2.0 * tn) + 0.5
    u = 100.0 / (b + math.sqrt(b * b + 50.0 / tn))
    return math.sqrt(u)


@njit
def h2_mckean_nb(t, rho, xi, wxi):
    out = np.empty(t.shape[0])
    m = xi.shape[0]
    for n in range(t.shape[0]):
        tn = t[n]
        wmax = _h2_upper(tn, rho)
        acc = 0.0
        for j in range(m):
            w = wmax * xi[j]
            w2 = w * w
            s = rho + w2
            lg = -w2 * (2.0 * rho + w2) / (4.0 * tn) - 0.5 * (_log_sinh(0.5 * (s + rho)) + _log_shc(0.5 * w2))
            acc += wxi[j] * 2.0 * s * math.exp(lg)
        pref = _SQRT2 * math.exp(-0.25 * tn - rho * rho / (4.0 * tn)) / (_FOUR_PI * tn) ** 1.5
        out[n] = pref * wmax * acc
    return out


def _log_sinh_np(a):
    with np.errstate(over="ignore"):
        return np.where(a > 20.0, a - math.log(2.0), np.log(np.sinh(np.minimum(a, 20.0))))


def _log_shc_np(y):
    ys = np.maximum(y, 1e-4)
    return np.where(y < 1e-4, y * y / 6.0, _log_sinh_np(ys) - np.log(ys))


def h2_mckean_np(t, rho, xi, wxi):
    t = np.asarray(t, dtype=float)[:, None]
    b = rho / (2.0 * t) + 0.5
    wmax = np.sqrt(100.0 / (b + np.sqrt(b * b + 50.0 / t)))
    w = wmax * xi[None, :]
    w2 = w * w
    s = rho + w2
    lg = -w2 * (2.0 * rho + w2) / (4.0 * t) - 0.5 * (_log_sinh_np(0.5 * (s + rho)) + _log_shc_np(0.5 * w2))
    with np.errstate(under="ignore"):
        acc = (2.0 * s * np.exp(lg)) @ wxi
        tt = t[:, 0]
        pref = _SQRT2 * np.exp(-0.25 * tt - rho * rho / (4.0 * tt)) / (_FOUR_PI * tt) ** 1.5
    return pref * wmax[:, 0] * acc


# ---------------------------------------------------------------- dispatch

def _as_t(t):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=float)))


def sphere_unit(t, theta, fluctuation=False, backend=None):
    """Unit-sphere kernel at times ``t`` (array) and angle ``theta`` (scalar).

    With ``fluctuation`` the constant mode 1/(4 pi) is removed.
    """
    backend = backend or BACKEND
    t = _as_t(t)
    theta = float(min(max(theta, 0.0), math.pi))
    out = np.empty_like(t)
    big = t >= S2_SERIES_T
    cth = math.cos(theta)
    if np.any(big):
        f = s2_series_nb if backend == "numba" else s2_series_np
        out[big] = f(np.ascontiguousarray(t[big]), cth, fluctuation)
    small = ~big
    if np.any(small):
        f = s2_image_nb if backend == "numba" else s2_image_np
        vals = f(np.ascontiguousarray(t[small]), theta, _S2_PHI, _S2_PHI_W)
        if fluctuation:
            vals = vals - 1.0 / _FOUR_PI
        out[small] = vals
    return out


def hyperbolic2_unit(t, rho, backend=None):
    """Heat kernel of the hyperbolic plane with curvature -1."""
    backend = backend or BACKEND
    t = _as_t(t)
    f = h2_mckean_nb if backend == "numba" else h2_mckean_np
    return f(t, float(rho), _H2_NODES, _H2_WEIGHTS)
