"""The supported geometries: flat R^2 and R^3, the round sphere S^2, and
hyperbolic H^2 and H^3, with their heat kernels in units hbar = 2m = 1.

Points are tuples: Cartesian for flat space, (theta, phi) for the sphere,
upper half-space (x_1, ..., y) with y > 0 for hyperbolic space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .quadrature import DEFAULT_QUAD, QuadratureConfig, time_integral


class InvalidPointError(ValueError):
    """Coordinates outside the chart of the geometry."""


class KernelDomainError(ValueError):
    """Non-positive time or energy outside the allowed range."""


class DiagonalDivergenceError(ValueError):
    """The resolvent was requested on the diagonal, where it diverges."""


class UnsupportedEnvelopeError(ValueError):
    """No kernel envelope is defined for this manifold class."""


_KINDS = ("flat", "sphere", "hyperbolic")


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str
    dim: int
    scale: float = 1.0  # sphere radius R, or hyperbolic kappa; ignored for flat

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown geometry {self.kind!r}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.kind == "sphere" and self.dim != 2:
            raise ValueError("only the two-sphere is supported")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale parameter must be positive")
        if self.kind == "flat" and self.scale != 1.0:
            object.__setattr__(self, "scale", 1.0)

    # constructors
    @classmethod
    def flat(cls, dim: int) -> "ManifoldSpec":
        return cls("flat", dim)

    @classmethod
    def sphere(cls, radius: float = 1.0) -> "ManifoldSpec":
        return cls("sphere", 2, float(radius))

    @classmethod
    def hyperbolic(cls, dim: int, kappa: float = 1.0) -> "ManifoldSpec":
        return cls("hyperbolic", dim, float(kappa))

    @property
    def label(self) -> str:
        if self.kind == "flat":
            return f"flat{self.dim}"
        if self.kind == "sphere":
            return f"sphere(R={self.scale!r})"
        return f"hyperbolic{self.dim}(kappa={self.scale!r})"

    @property
    def is_compact(self) -> bool:
        return self.kind == "sphere"

    @property
    def is_cartan_hadamard(self) -> bool:
        return self.kind != "sphere"

    @property
    def volume(self) -> float:
        if self.kind != "sphere":
            raise ValueError(f"{self.label} has infinite volume")
        return 4.0 * math.pi * self.scale ** 2

    @property
    def spectral_bottom(self) -> float:
        if self.kind == "hyperbolic":
            return (self.dim - 1) ** 2 * self.scale ** 2 / 4.0
        return 0.0

    @property
    def spectral_gap(self) -> float:
        """Decay rate of K_t minus its t -> inf limit (first non-zero sphere mode)."""
        if self.kind == "sphere":
            return 2.0 / self.scale ** 2
        return self.spectral_bottom

    @property
    def diameter(self) -> float:
        return math.pi * self.scale if self.kind == "sphere" else math.inf

    # points
    def validate_point(self, p) -> tuple:
        try:
            p = tuple(float(c) for c in p)
        except TypeError as exc:
            raise InvalidPointError(f"point {p!r} is not a coordinate tuple") from exc
        if not all(math.isfinite(c) for c in p):
            raise InvalidPointError(f"non-finite coordinates {p!r}")
        if self.kind == "sphere":
            if len(p) != 2:
                raise InvalidPointError("sphere points are (theta, phi)")
            if not 0.0 <= p[0] <= math.pi:
                raise InvalidPointError(f"theta = {p[0]!r} not in [0, pi]")
            if not 0.0 <= p[1] < 2.0 * math.pi:
                raise InvalidPointError(f"phi = {p[1]!r} not in [0, 2 pi)")
        else:
            if len(p) != self.dim:
                raise InvalidPointError(f"{self.label} points need {self.dim} coordinates")
            if self.kind == "hyperbolic" and not p[-1] > 0.0:
                raise InvalidPointError(f"half-space height {p[-1]!r} must be > 0")
        return p

    def distance(self, x, y) -> float:
        x = self.validate_point(x)
        y = self.validate_point(y)
        if self.kind == "flat":
            return math.dist(x, y)
        if self.kind == "sphere":
            u = _unit_vector(x)
            v = _unit_vector(y)
            cross = np.linalg.norm(np.cross(u, v))
            return self.scale * math.atan2(cross, float(np.dot(u, v)))
        num = math.dist(x, y)
        return 2.0 / self.scale * math.asinh(num / (2.0 * math.sqrt(x[-1] * y[-1])))

    def scaled(self, alpha: float) -> "ManifoldSpec":
        """The same space with metric alpha^2 g."""
        if self.kind == "flat":
            return self
        if self.kind == "sphere":
            return ManifoldSpec.sphere(self.scale * alpha)
        return ManifoldSpec.hyperbolic(self.dim, self.scale / alpha)

    def scale_point(self, p, alpha: float) -> tuple:
        """Coordinates of p in the alpha^2 g copy (only flat coordinates move)."""
        p = self.validate_point(p)
        if self.kind == "flat":
            return tuple(alpha * c for c in p)
        return p

    def area_density(self, r):
        """Area of the geodesic sphere of radius r."""
        r = np.asarray(r, dtype=float)
        k = self.scale
        if self.kind == "flat":
            out = 2.0 * math.pi * r if self.dim == 2 else 4.0 * math.pi * r ** 2
        elif self.kind == "sphere":
            out = 2.0 * math.pi * k * np.sin(r / k)
        elif self.dim == 2:
            out = 2.0 * math.pi * np.sinh(k * r) / k
        else:
            out = 4.0 * math.pi * (np.sinh(k * r) / k) ** 2
        return float(out) if out.ndim == 0 else out

    def radial_laplacian_coeff(self, r):
        """J'(r)/J(r), the first-order coefficient of the radial Laplacian."""
        k = self.scale
        if self.kind == "flat":
            return (self.dim - 1) / r
        if self.kind == "sphere":
            return 1.0 / (k * math.tan(r / k))
        return (self.dim - 1) * k / math.tanh(k * r)

    # kernels
    def kernel(self, t, d, backend=None):
        """K_t at geodesic distance d; vectorized over t (d scalar) or d (t scalar)."""
        t_arr = np.asarray(t, dtype=float)
        d_arr = np.asarray(d, dtype=float)
        if np.any(t_arr <= 0):
            raise KernelDomainError("heat kernel needs t > 0")
        if d_arr.ndim and t_arr.ndim and d_arr.size > 1 and t_arr.size > 1:
            tb, db = np.broadcast_arrays(t_arr, d_arr)
            return np.array([self.kernel(a, b, backend) for a, b in zip(tb.ravel(), db.ravel())]).reshape(tb.shape)
        if d_arr.size > 1:
            out = np.array([float(self.kernel(t_arr.ravel()[0], dd, backend)[0]) for dd in d_arr.ravel()])
            return out.reshape(d_arr.shape)
        dd = float(d_arr.ravel()[0])
        tt = np.atleast_1d(t_arr).astype(float).ravel()
        return self._kernel_t(tt, dd, False, backend)

    def kernel_fluctuation(self, t, d, backend=None):
        """K_t(d) - 1/V on the sphere (decays like e^{-2t/R^2})."""
        if self.kind != "sphere":
            raise ValueError("fluctuation kernel is defined for compact geometries only")
        tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        return self._kernel_t(tt, float(d), True, backend)

    def _kernel_t(self, t, d, fluct, backend):
        k = self.scale
        D = self.dim
        if self.kind == "flat":
            with np.errstate(under="ignore"):
                return np.exp(-d * d / (4.0 * t)) / (4.0 * math.pi * t) ** (D / 2)
        if self.kind == "sphere":
            return _kernels.sphere_unit(t / k ** 2, d / k, fluct, backend) / k ** 2
        rho = k * d
        tau = k * k * t
        if D == 2:
            return k ** 2 * _kernels.hyperbolic2_unit(tau, rho, backend)
        # rho / sinh(rho) = 2 rho e^{-rho} / (1 - e^{-2 rho})
        if rho < 1e-8:
            lr = 0.0
        else:
            lr = math.log(2.0 * rho) - rho - math.log(-math.expm1(-2.0 * rho))
        with np.errstate(under="ignore"):
            return k ** 3 * np.exp(lr - tau - rho * rho / (4.0 * tau)) / (4.0 * math.pi * tau) ** 1.5


def _unit_vector(p):
    th, ph = p
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def geodesic_distance(m: ManifoldSpec, x, y) -> float:
    return m.distance(x, y)


def heat_kernel(m: ManifoldSpec, t, x, y):
    """K_t(x, y); t may be an array."""
    val = m.kernel(t, m.distance(x, y))
    return float(val[0]) if np.ndim(t) == 0 else val


def resolvent_at_distance(m: ManifoldSpec, d: float, E: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Free resolvent R_0(d | E) = int_0^inf e^{Et} K_t(d) dt for d > 0, E < 0."""
    if not E < 0:
        raise KernelDomainError("free resolvent needs E < 0")
    if not d > 0:
        raise DiagonalDivergenceError("free resolvent diverges on the diagonal")
    nu2 = -E

    def g(t):
        with np.errstate(under="ignore"):
            return m.kernel(t, d) * np.exp(-nu2 * t)

    rate = nu2 + m.spectral_bottom
    val, _ = time_integral(g, rate, quad, d / (2.0 * math.sqrt(rate)))
    return val


def free_resolvent(m: ManifoldSpec, x, y, E: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    d = m.distance(x, y)
    if d == 0.0:
        raise DiagonalDivergenceError("free resolvent diverges on the diagonal")
    return resolvent_at_distance(m, d, E, quad)


def kernel_bound_envelope(m: ManifoldSpec, kind: str, t, d, constants):
    """Gaussian-type envelopes of the heat kernel.

    upper_offdiag, compact:         4A [1/V + B t^{-D/2}] e^{-d^2/(2 C2 t)}
    upper_offdiag, Cartan-Hadamard: C (4 pi t)^{-D/2} e^{-d^2/(2 C2 t)}
    lower_diag, compact (Ric >= 0): (4 pi t)^{-D/2}
    lower_diag, Cartan-Hadamard:    c (4 pi t)^{-D/2} e^{-xi t}
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(t <= 0):
        raise KernelDomainError("envelope needs t > 0")
    if constants.C2 < 2:
        raise ValueError("C2 must be at least 2")
    D = m.dim
    with np.errstate(under="ignore"):
        if kind == "upper_offdiag":
            gauss = np.exp(-d * d / (2.0 * constants.C2 * t))
            if m.is_compact:
                out = 4.0 * constants.A * (1.0 / m.volume + constants.B * t ** (-D / 2)) * gauss
            else:
                out = constants.C * (4.0 * math.pi * t) ** (-D / 2) * gauss
        elif kind == "lower_diag":
            if m.is_compact:
                out = (4.0 * math.pi * t) ** (-D / 2) + 0.0 * d
            else:
                out = constants.c * (4.0 * math.pi * t) ** (-D / 2) * np.exp(-constants.xi * t) + 0.0 * d
        else:
            raise UnsupportedEnvelopeError(f"unknown envelope kind {kind!r}")
    return float(out) if out.ndim == 0 else out
