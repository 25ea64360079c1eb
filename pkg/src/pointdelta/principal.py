"""The principal matrix Phi(E), E = -nu^2, of N renormalized point interactions.

Diagonal:     Phi_ii = int_0^inf K_t(a_i, a_i) (e^{-t mu_i^2} - e^{-t nu^2}) dt
Off-diagonal: Phi_ij = -int_0^inf K_t(a_i, a_j) e^{-t nu^2} dt
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .manifold import ManifoldSpec, resolvent_at_distance
from .quadrature import DEFAULT_QUAD, QuadratureConfig, QuadratureError, time_integral


class CoincidentCentersError(ValueError):
    """Two interaction centers sit at the same point."""


class AssemblyError(RuntimeError):
    """An entry of the principal matrix could not be computed."""

    def __init__(self, i, j, cause):
        super().__init__(f"entry ({i}, {j}): {cause}")
        self.i, self.j, self.cause = i, j, cause


@dataclass(frozen=True)
class CenterSet:
    points: tuple
    mus: tuple

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.points)
        mus = tuple(float(u) for u in self.mus)
        if len(pts) == 0:
            raise ValueError("need at least one center")
        if len(pts) != len(mus):
            raise ValueError("points and mus differ in length")
        if not all(u > 0 and math.isfinite(u) for u in mus):
            raise ValueError("every mu must be positive")
        if len(set(pts)) != len(pts):
            raise CoincidentCentersError("coincident centers")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mus", mus)

    @property
    def n(self) -> int:
        return len(self.points)

    def distances(self, m: ManifoldSpec) -> np.ndarray:
        n = self.n
        d = np.zeros((n, n))
        for i in range(n):
            m.validate_point(self.points[i])
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = m.distance(self.points[i], self.points[j])
                if d[i, j] == 0.0:
                    raise CoincidentCentersError(f"centers {i} and {j} coincide")
        return d

    def min_distance(self, m: ManifoldSpec) -> float:
        if self.n < 2:
            return math.inf
        d = self.distances(m)
        return float(d[np.triu_indices(self.n, 1)].min())

    def mu_d(self, m: ManifoldSpec) -> float:
        """Natural energy scale 1/d_min (0 for a single center)."""
        return 0.0 if self.n < 2 else 1.0 / self.min_distance(m)

    def subset(self, idx) -> "CenterSet":
        return CenterSet(tuple(self.points[i] for i in idx), tuple(self.mus[i] for i in idx))


@dataclass(frozen=True)
class PrincipalMatrix:
    nu: float
    entries: np.ndarray = field(repr=False)

    @property
    def energy(self) -> float:
        return -self.nu * self.nu

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _check_nu(nu):
    if not (nu > 0 and math.isfinite(nu)):
        raise ValueError(f"nu must be positive, got {nu!r}")


def _peak(d, rate):
    # location of the maximum of e^{-d^2/4t - rate t}
    return d / (2.0 * math.sqrt(rate))


def _diag_value(m: ManifoldSpec, mu: float, nu: float, quad: QuadratureConfig, delta: float | None = None) -> float:
    # delta, when given, is nu - mu carried exactly (nu itself may round it away)
    if delta is None:
        delta = nu - mu
    else:
        nu = mu + delta
    if delta == 0.0:
        return 0.0
    lo2 = min(mu, nu) ** 2
    dq = delta * (2.0 * mu + delta)
    sign = 1.0 if dq > 0 else -1.0

    def weight(t):
        # e^{-mu^2 t} - e^{-nu^2 t} without cancellation
        with np.errstate(under="ignore"):
            return -sign * np.exp(-lo2 * t) * np.expm1(-abs(dq) * t)

    if m.is_compact:
        def g(t):
            return m.kernel_fluctuation(t, 0.0) * weight(t)

        val, _ = time_integral(g, lo2 + m.spectral_gap, quad)
        return val + dq / (mu * mu * nu * nu * m.volume)

    def g(t):
        return m.kernel(t, 0.0) * weight(t)

    val, _ = time_integral(g, lo2 + m.spectral_bottom, quad)
    return val


def phi_diagonal_shifted(m: ManifoldSpec, mu: float, delta: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Phi_ii at nu = mu + delta, accurate in delta even when |delta| << mu."""
    if not mu > 0 or not mu + delta > 0:
        raise ValueError("need mu > 0 and mu + delta > 0")
    return _diag_value(m, float(mu), float(mu + delta), quad, float(delta))


def phi_diagonal(m: ManifoldSpec, a, mu: float, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    m.validate_point(a)
    if not mu > 0:
        raise ValueError("mu must be positive")
    _check_nu(nu)
    return _diag_value(m, float(mu), float(nu), quad)


def _offdiag_value(m: ManifoldSpec, d: float, nu: float, quad: QuadratureConfig) -> float:
    nu2 = nu * nu
    if m.is_compact:
        def g(t):
            with np.errstate(under="ignore"):
                return m.kernel_fluctuation(t, d) * np.exp(-nu2 * t)

        val, _ = time_integral(g, nu2 + m.spectral_gap, quad, _peak(d, nu2))
        return -(val + 1.0 / (m.volume * nu2))
    return -resolvent_at_distance(m, d, -nu2, quad)


def phi_offdiagonal(m: ManifoldSpec, a_i, a_j, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    _check_nu(nu)
    d = m.distance(a_i, a_j)
    if d == 0.0:
        raise CoincidentCentersError("off-diagonal entry needs distinct centers")
    return _offdiag_value(m, d, float(nu), quad)


def _dphi_value(m: ManifoldSpec, d: float, nu: float, quad: QuadratureConfig) -> float:
    nu2 = nu * nu
    if m.is_compact:
        def g(t):
            with np.errstate(under="ignore"):
                return 2.0 * nu * t * m.kernel_fluctuation(t, d) * np.exp(-nu2 * t)

        val, _ = time_integral(g, nu2 + m.spectral_gap, quad, _peak(d, nu2))
        return val + 2.0 / (m.volume * nu ** 3)

    def g(t):
        with np.errstate(under="ignore"):
            return 2.0 * nu * t * m.kernel(t, d) * np.exp(-nu2 * t)

    val, _ = time_integral(g, nu2 + m.spectral_bottom, quad, _peak(d, nu2 + m.spectral_bottom))
    return val


def phi_derivative_nu(m: ManifoldSpec, a_i, a_j, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """d Phi_ij / d nu = int 2 nu t K_t(a_i, a_j) e^{-t nu^2} dt (the same for i = j)."""
    _check_nu(nu)
    return _dphi_value(m, m.distance(a_i, a_j), float(nu), quad)


def _entry_jobs(cs: CenterSet, dist):
    n = cs.n
    return [(i, j, dist[i, j]) for i in range(n) for j in range(i, n)]


def _fill(n, jobs, fn, workers):
    out = np.zeros((n, n))

    def run(job):
        i, j, d = job
        try:
            return fn(i, j, d)
        except (QuadratureError, ValueError, FloatingPointError) as exc:
            raise AssemblyError(i, j, exc) from exc

    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(run, jobs))
    else:
        vals = [run(job) for job in jobs]
    for (i, j, _), v in zip(jobs, vals):
        out[i, j] = out[j, i] = v
    return out


def assemble(m: ManifoldSpec, cs: CenterSet, nu: float, quad: QuadratureConfig = DEFAULT_QUAD,
             workers: int | None = None) -> PrincipalMatrix:
    _check_nu(nu)
    nu = float(nu)
    dist = cs.distances(m)

    def entry(i, j, d):
        if i == j:
            return _diag_value(m, cs.mus[i], nu, quad)
        return _offdiag_value(m, d, nu, quad)

    return PrincipalMatrix(nu, _fill(cs.n, _entry_jobs(cs, dist), entry, workers))


def dphi_matrix(m: ManifoldSpec, cs: CenterSet, nu: float, quad: QuadratureConfig = DEFAULT_QUAD,
                workers: int | None = None) -> np.ndarray:
    _check_nu(nu)
    nu = float(nu)
    dist = cs.distances(m)
    return _fill(cs.n, _entry_jobs(cs, dist), lambda i, j, d: _dphi_value(m, d, nu, quad), workers)


def norm_bracket_matrix(m: ManifoldSpec, cs: CenterSet, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Matrix of int_0^inf t K_t(a_i, a_j) e^{-t nu^2} dt."""
    _check_nu(nu)
    nu2 = nu * nu
    dist = cs.distances(m)

    def entry(i, j, d):
        if m.is_compact:
            def g(t):
                with np.errstate(under="ignore"):
                    return t * m.kernel_fluctuation(t, d) * np.exp(-nu2 * t)

            val, _ = time_integral(g, nu2 + m.spectral_gap, quad, _peak(d, nu2))
            return val + 1.0 / (m.volume * nu2 * nu2)

        def g(t):
            with np.errstate(under="ignore"):
                return t * m.kernel(t, d) * np.exp(-nu2 * t)

        val, _ = time_integral(g, nu2 + m.spectral_bottom, quad, _peak(d, nu2 + m.spectral_bottom))
        return val

    return _fill(cs.n, _entry_jobs(cs, dist), entry, None)


def resolvent_difference_check(m: ManifoldSpec, cs: CenterSet, i: int, j: int, E1: float, E2: float,
                               quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """|(Phi_ij(E2) - Phi_ij(E1)) - (R_0(E1) - R_0(E2))|.

    The right-hand side is integrated as one difference integral
    int K_t (e^{E1 t} - e^{E2 t}) dt, independently of the entry routine.
    """
    if i == j:
        raise ValueError("resolvent difference check needs i != j")
    if not (E1 < 0 and E2 < 0):
        raise ValueError("energies must be negative")
    if E1 == E2:
        return 0.0
    d = m.distance(cs.points[i], cs.points[j])
    lhs = _offdiag_value(m, d, math.sqrt(-E2), quad) - _offdiag_value(m, d, math.sqrt(-E1), quad)
    lo = min(-E1, -E2)
    # factor out the slower exponential so that nothing overflows at large t
    hi_e, gap = max(E1, E2), abs(E2 - E1)
    sign = 1.0 if E1 > E2 else -1.0

    def g(t):
        with np.errstate(under="ignore"):
            return sign * m.kernel(t, d) * np.exp(hi_e * t) * -np.expm1(-gap * t)

    rhs, _ = time_integral(g, lo + m.spectral_bottom, quad, _peak(d, lo + m.spectral_bottom))
    return abs(lhs - rhs)
