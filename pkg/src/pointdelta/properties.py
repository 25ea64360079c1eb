"""Heat-kernel property suite, run per geometry.

Every check returns a PropertyResult holding the worst observed deviation
and the tolerance it was held to.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from ._geometry import Model
from .manifold import ManifoldSpec

TOLERANCES = {
    "symmetry": 1e-13,
    "positivity": 0.0,
    "semigroup": 1e-5,
    "semigroup_series": 1e-12,
    "stochastic_completeness": 1e-6,
    "short_time_diagonal": 1e-3,
    "scaling": 1e-10,
    "heat_equation": 1e-4,
}


@dataclass(frozen=True)
class PropertyResult:
    name: str
    geometry: str
    passed: bool
    deviation: float
    tolerance: float

    def to_dict(self) -> dict:
        return asdict(self)


def _result(name, m, dev, tol=None):
    tol = TOLERANCES[name] if tol is None else tol
    return PropertyResult(name, m.label, bool(dev <= tol), float(dev), tol)


def sample_points(m: ManifoldSpec) -> list:
    if m.kind == "flat":
        if m.dim == 2:
            return [(0.0, 0.0), (0.7, -0.2), (-1.1, 0.9), (2.0, 1.5)]
        return [(0.0, 0.0, 0.0), (0.7, -0.2, 0.4), (-1.1, 0.9, 0.3), (1.5, 1.0, -1.2)]
    if m.kind == "sphere":
        return [(0.3, 0.0), (1.2, 2.0), (2.5, 4.0), (math.pi, 0.0)]
    if m.dim == 2:
        return [(0.0, 1.0), (0.6, 1.4), (-0.8, 0.5), (1.5, 2.5)]
    return [(0.0, 0.0, 1.0), (0.6, -0.3, 1.4), (-0.8, 0.2, 0.5), (1.0, 1.0, 2.5)]


_TIMES = (0.05, 0.3, 1.0, 2.5)


def check_symmetry(m: ManifoldSpec) -> PropertyResult:
    pts = sample_points(m)
    worst = 0.0
    for i, x in enumerate(pts):
        for y in pts[i + 1:]:
            for t in _TIMES:
                a = float(m.kernel(t, m.distance(x, y))[0])
                b = float(m.kernel(t, m.distance(y, x))[0])
                worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return _result("symmetry", m, worst)


def check_positivity(m: ManifoldSpec) -> PropertyResult:
    ds = np.linspace(0.0, 6.0 if m.kind != "sphere" else math.pi * m.scale, 25)
    lowest = math.inf
    for t in _TIMES:
        vals = np.array([float(m.kernel(t, d)[0]) for d in ds])
        lowest = min(lowest, float(vals.min()))
    # deviation is how far the smallest value falls short of positivity
    return PropertyResult("positivity", m.label, lowest > 0.0, max(0.0, -lowest), 0.0)


def _gl_panels(a, b, n_panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


def _shell_average(m, model, t, s, delta):
    """Integral over directions at radius s of K_t(z, y), with y at distance delta."""
    L = model.length
    if m.dim == 2:
        g, wg = _gl_panels(0.0, math.pi, 4, 24)
        jac = 2.0 * wg
    else:
        g, wg = _gl_panels(0.0, math.pi, 4, 24)
        jac = 2.0 * math.pi * np.sin(g) * wg
    h = np.sin(0.5 * g) ** 2
    total = 0.0
    for gi, hi, ji in zip(g, h, jac):
        d = float(model.third_side(s / L, delta / L, hi)) * L
        total += ji * float(m.kernel(t, d)[0])
    return total


def semigroup_residual(m: ManifoldSpec, t1: float, t2: float, delta: float) -> float:
    """Relative error of int K_{t1}(x, z) K_{t2}(z, y) dz against K_{t1+t2}(x, y),
    integrated in geodesic polar coordinates about x."""
    model = Model(m)
    L = model.length
    if m.kind == "sphere":
        s_max = math.pi * m.scale
        n_panels = 16
    else:
        s_max = 14.0 * math.sqrt(t1)
        n_panels = 14
    s, ws = _gl_panels(0.0, s_max, n_panels, 12)
    k1 = np.array([float(m.kernel(t1, si)[0]) for si in s])
    area = model.area_factor(s / L) * L ** (m.dim - 1)
    inner = np.array([_shell_average(m, model, t2, si, delta) for si in s])
    lhs = float(np.sum(ws * area * k1 * inner))
    rhs = float(m.kernel(t1 + t2, delta)[0])
    return abs(lhs - rhs) / rhs


def sphere_series_semigroup(t1: float, t2: float, l_max: int = 400) -> float:
    """Worst mismatch of the Legendre-series decay factors under composition."""
    ll = np.arange(l_max + 1, dtype=float)
    lam = ll * (ll + 1.0)
    a = np.exp(-lam * t1) * np.exp(-lam * t2)
    b = np.exp(-lam * (t1 + t2))
    scale = np.maximum(b, 1e-300)
    mask = b > 1e-250
    return float(np.max(np.abs(a - b)[mask] / scale[mask]))


def check_semigroup(m: ManifoldSpec) -> list:
    cases = ((0.2, 0.3, 0.8), (0.5, 0.25, 1.5))
    worst = max(semigroup_residual(m, *c) for c in cases)
    out = [_result("semigroup", m, worst)]
    if m.kind == "sphere":
        out.append(_result("semigroup_series", m, sphere_series_semigroup(0.2, 0.3)))
    return out


def stochastic_completeness_residual(m: ManifoldSpec, t: float) -> float:
    if m.kind == "sphere":
        s, w = _gl_panels(0.0, math.pi * m.scale, 24, 16)
    else:
        rate = math.sqrt(t)
        s, w = _gl_panels(0.0, 16.0 * rate + 4.0 * m.spectral_bottom ** 0.5 * t * 2.0, 24, 16)
    k = np.array([float(m.kernel(t, si)[0]) for si in s])
    return abs(float(np.sum(w * m.area_density(s) * k)) - 1.0)


def check_stochastic_completeness(m: ManifoldSpec) -> PropertyResult:
    return _result("stochastic_completeness", m,
                   max(stochastic_completeness_residual(m, t) for t in (0.05, 0.4, 1.5)))


def check_short_time_diagonal(m: ManifoldSpec, t: float = 1e-4) -> PropertyResult:
    val = float(m.kernel(t, 0.0)[0]) * (4.0 * math.pi * t) ** (m.dim / 2)
    return _result("short_time_diagonal", m, abs(val - 1.0))


def check_scaling(m: ManifoldSpec) -> PropertyResult:
    """K_t(x, y; g) = alpha^D K_{alpha^2 t}(x, y; alpha^2 g)."""
    pts = sample_points(m)
    worst = 0.0
    for alpha in (0.5, 1.7, 3.0):
        ms = m.scaled(alpha)
        for y in pts[1:]:
            x = pts[0]
            d = m.distance(x, y)
            ds = ms.distance(m.scale_point(x, alpha), m.scale_point(y, alpha))
            for t in _TIMES:
                a = float(m.kernel(t, d)[0])
                b = alpha ** m.dim * float(ms.kernel(alpha * alpha * t, ds)[0])
                if a > 1e-280:
                    worst = max(worst, abs(a - b) / a)
    return _result("scaling", m, worst)


def heat_equation_residual(m: ManifoldSpec, t: float, d: float) -> float:
    """|dK/dt - Laplacian K| / |dK/dt| with the radial Laplacian by central differences."""
    ht = 1e-4 * t
    kt = (float(m.kernel(t + ht, d)[0]) - float(m.kernel(t - ht, d)[0])) / (2.0 * ht)
    h = 2e-3 * math.sqrt(t)
    kp, k0, km = (float(m.kernel(t, d + s)[0]) for s in (h, 0.0, -h))
    lap = (kp - 2.0 * k0 + km) / (h * h) + m.radial_laplacian_coeff(d) * (kp - km) / (2.0 * h)
    return abs(kt - lap) / max(abs(kt), 1e-300)


def check_heat_equation(m: ManifoldSpec) -> PropertyResult:
    cases = [(0.3, 0.4), (1.0, 1.1), (0.6, 2.0)]
    if m.kind == "sphere":
        cases = [(t, min(d, 0.9 * math.pi) * m.scale) for t, d in cases]
    elif m.kind == "hyperbolic":
        # kappa sets the length scale
        k = m.scale
        cases = [(t / (k * k), d / k) for t, d in cases]
    return _result("heat_equation", m, max(heat_equation_residual(m, t, d) for t, d in cases))


def run_suite(m: ManifoldSpec) -> list:
    out = [check_symmetry(m), check_positivity(m)]
    out.extend(check_semigroup(m))
    out += [check_stochastic_completeness(m), check_short_time_diagonal(m), check_scaling(m),
            check_heat_equation(m)]
    return out


def standard_geometries() -> list:
    return [ManifoldSpec.flat(2), ManifoldSpec.flat(3), ManifoldSpec.sphere(1.0),
            ManifoldSpec.hyperbolic(2, 1.0), ManifoldSpec.hyperbolic(3, 1.0)]
