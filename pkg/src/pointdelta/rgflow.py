"""Renormalization-group form of the principal matrix.

A single scale M replaces the binding scales on the diagonal:

    Phi^R_ii(E) = 1/lambda_R - int_0^inf [K_t(a_i, a_i) e^{tE} - e^{-M^2 t} (4 pi t)^{-D/2}] dt - Sigma_i

with 1/lambda_R read as M/lambda_hat in D = 3, where the stored coupling
lambda_hat = M lambda_R is dimensionless.  Off-diagonal entries are those of
the mu-scheme matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifold import ManifoldSpec
from .principal import CenterSet, PrincipalMatrix, _diag_value, _fill, _entry_jobs, _offdiag_value
from .quadrature import DEFAULT_QUAD, QuadratureConfig, time_integral
from .spectral import _Branches, eigensystem, solve_branch, NoBoundStateOnBranch


SERIES_T = 3e-3


class LandauPoleError(ArithmeticError):
    """The coupling flow crosses a pole before reaching the requested scale."""


@dataclass(frozen=True)
class RGState:
    D: int
    M: float
    coupling: float
    sigma: tuple = ()

    def __post_init__(self):
        if self.D not in (2, 3):
            raise ValueError("D must be 2 or 3")
        if not (self.M > 0 and math.isfinite(self.M)):
            raise ValueError("M must be positive")
        if self.coupling == 0 or not math.isfinite(self.coupling):
            raise ValueError("coupling must be finite and nonzero")
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        if self.sigma and self.sigma[0] != 0.0:
            raise ValueError("Sigma_1 must be 0")

    @property
    def inverse_coupling(self) -> float:
        """The leading diagonal term 1/lambda_R."""
        return (self.M if self.D == 3 else 1.0) / self.coupling

    def with_coupling(self, coupling: float) -> "RGState":
        return RGState(self.D, self.M, coupling, self.sigma)


def subtracted_integral(m: ManifoldSpec, nu: float, M: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """int_0^inf [K_t(a, a) e^{-nu^2 t} - e^{-M^2 t} (4 pi t)^{-D/2}] dt."""
    D = m.dim
    nu2, M2 = nu * nu, M * M
    dq = M2 - nu2

    if m.kind == "flat":
        def excess(t):
            return np.zeros_like(t)
    elif m.kind == "hyperbolic" and D == 3:
        k2 = m.scale ** 2

        def excess(t):
            return np.expm1(-k2 * t)
    else:
        # surfaces: heat-trace series below SERIES_T, where the kernel itself
        # carries too much absolute noise to resolve rho - 1
        c2 = (1.0 if m.kind == "sphere" else -1.0) * m.scale ** (2 if m.kind == "hyperbolic" else -2)

        def excess(t):
            t = np.asarray(t, dtype=float)
            out = np.empty_like(t)
            small = t < SERIES_T
            x = c2 * t[small]
            out[small] = x * (1.0 / 3.0 + x * (1.0 / 15.0 + x * (4.0 / 315.0 + x / 315.0)))
            if np.any(~small):
                tb = t[~small]
                out[~small] = m.kernel(tb, 0.0) * (4.0 * math.pi * tb) ** (D / 2) - 1.0
            return out

    lo2 = min(nu2, M2)
    sign = 1.0 if dq > 0 else -1.0

    def g(t):
        # (4 pi t)^{-D/2} [rho e^{-nu^2 t} - e^{-M^2 t}], rho = K (4 pi t)^{D/2}
        with np.errstate(under="ignore"):
            diff = -sign * np.exp(-lo2 * t) * np.expm1(-abs(dq) * t)
            return (4.0 * math.pi * t) ** (-D / 2) * (excess(t) * np.exp(-nu2 * t) + diff)

    rate = min(nu2 + m.spectral_bottom, M2)
    val, _ = time_integral(g, rate, quad)
    return val


def sigma_offsets(m: ManifoldSpec, cs: CenterSet, quad: QuadratureConfig = DEFAULT_QUAD) -> tuple:
    """Sigma_i = int [K(a_1, a_1) e^{-mu_1^2 t} - K(a_i, a_i) e^{-mu_i^2 t}] dt, Sigma_1 = 0."""
    mu1 = cs.mus[0]
    return tuple(0.0 if i == 0 else float(_diag_value(m, mu1, cs.mus[i], quad)) for i in range(cs.n))


def scheme_for(m: ManifoldSpec, cs: CenterSet, M: float, quad: QuadratureConfig = DEFAULT_QUAD) -> RGState:
    """The RG state at scale M that binds each isolated center at -mu_i^2."""
    inv = subtracted_integral(m, cs.mus[0], M, quad)
    if inv == 0.0:
        raise LandauPoleError(f"coupling diverges at M = {M!r}")
    coupling = (M if m.dim == 3 else 1.0) / inv
    return RGState(m.dim, M, coupling, sigma_offsets(m, cs, quad))


def renormalized_phi(m: ManifoldSpec, cs: CenterSet, rg: RGState, E: float,
                     quad: QuadratureConfig = DEFAULT_QUAD) -> PrincipalMatrix:
    if not E < 0:
        raise ValueError("renormalized principal matrix needs E < 0")
    if rg.D != m.dim:
        raise ValueError(f"RG state is for D = {rg.D}, geometry has D = {m.dim}")
    sigma = rg.sigma or (0.0,) * cs.n
    if len(sigma) != cs.n:
        raise ValueError("one offset per center required")
    nu = math.sqrt(-E)
    lead = rg.inverse_coupling
    diag = lead - subtracted_integral(m, nu, rg.M, quad)

    def entry(i, j, d):
        if i == j:
            return diag - sigma[i]
        return _offdiag_value(m, d, nu, quad)

    return PrincipalMatrix(nu, _fill(cs.n, _entry_jobs(cs, cs.distances(m)), entry, None))


def beta(D: int, coupling: float) -> float:
    if D == 2:
        return -coupling * coupling / (2.0 * math.pi)
    if D == 3:
        return coupling - coupling * coupling / (4.0 * math.pi)
    raise ValueError("D must be 2 or 3")


def flow_coupling(D: int, coupling: float, gamma: float) -> float:
    """Coupling at scale gamma M from its value at M."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if D == 2:
        den = 1.0 + coupling * math.log(gamma) / (2.0 * math.pi)
        if den <= 0.0:
            raise LandauPoleError(f"D=2 flow from {coupling!r} hits a pole before gamma = {gamma!r}")
        return coupling / den
    if D == 3:
        den = 1.0 - coupling * (1.0 - gamma) / (4.0 * math.pi)
        if den <= 0.0:
            raise LandauPoleError(f"D=3 flow from {coupling!r} hits a pole before gamma = {gamma!r}")
        return gamma * coupling / den
    raise ValueError("D must be 2 or 3")


def flow_table(D: int, coupling: float, gammas) -> list:
    """Rows (gamma, coupling(gamma M), beta) for the CLI."""
    rows = []
    for g in gammas:
        c = flow_coupling(D, coupling, float(g))
        rows.append((float(g), c, beta(D, c)))
    return rows


def scaling_covariance_check(m: ManifoldSpec, cs: CenterSet, rg: RGState, gamma: float, E: float,
                             quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """max |Phi^R(M, lambda(M), gamma^2 E; gamma^{-2} g) - gamma^{D-2} Phi^R(M, lambda(gamma M), E; g)|."""
    if gamma == 1.0:
        return 0.0
    D = rg.D
    fac = gamma ** (D - 2)
    ms = m.scaled(1.0 / gamma)
    cs_s = CenterSet(tuple(m.scale_point(p, 1.0 / gamma) for p in cs.points),
                     tuple(gamma * u for u in cs.mus))
    sig = rg.sigma or (0.0,) * cs.n
    left_rg = RGState(D, rg.M, rg.coupling, tuple(fac * s for s in sig))
    left = renormalized_phi(ms, cs_s, left_rg, gamma * gamma * E, quad).entries
    right_rg = rg.with_coupling(flow_coupling(D, rg.coupling, gamma))
    right = renormalized_phi(m, cs, right_rg, E, quad).entries
    return float(np.max(np.abs(left - fac * right)))


class _RenormalizedBranches(_Branches):
    def __init__(self, m, cs, rg, quad):
        super().__init__(m, cs, quad, None)
        self.rg = rg

    def system(self, nu):
        nu = float(nu)
        es = self._cache.get(nu)
        if es is None:
            es = eigensystem(renormalized_phi(self.m, self.cs, self.rg, -nu * nu, self.quad))
            self._cache[nu] = es
        return es


def solve_renormalized(m: ManifoldSpec, cs: CenterSet, rg: RGState, quad: QuadratureConfig = DEFAULT_QUAD,
                       root_tol: float = 1e-10) -> list:
    """Roots nu of det Phi^R(-nu^2) = 0, one per branch that binds, largest first."""
    br = _RenormalizedBranches(m, cs, rg, quad)
    roots = []
    for k in range(cs.n):
        try:
            roots.append(solve_branch(m, cs, k, quad, root_tol, _br=br).nu)
        except NoBoundStateOnBranch:
            pass
    return sorted(roots, reverse=True)
