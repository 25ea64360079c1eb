"""Tunneling-regime perturbation theory for well separated centers.

With all off-diagonal entries small, the root of branch k moves from mu_k by

    delta nu_k ~ (d Phi_kk / d nu)^{-1} sum_{l != k} Phi_kl Phi_lk / Phi_ll,

everything evaluated at nu = mu_k.  Center indices are 0-based.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .manifold import ManifoldSpec
from .principal import CenterSet, _dphi_value, assemble, phi_diagonal_shifted
from .quadrature import DEFAULT_QUAD, QuadratureConfig
from .spectral import solve_spectrum


class DegenerateMuError(ValueError):
    """Perturbation theory needs pairwise distinct mu_i."""


class OutOfRegimeWarning(RuntimeWarning):
    pass


class UnsupportedGeometryError(ValueError):
    """No exact short-time prefactor is known for this geometry."""


class BranchMatchError(LookupError):
    """No solved root lies close enough to mu_k."""


REGIME_RATIO = 1e3


@dataclass(frozen=True)
class PerturbationReport:
    k: int
    nu0: float
    delta_nu: float
    delta_E: float
    exact_nu: float
    exact_delta_nu: float
    relative_error: float
    regime_ratio: float
    dominance_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_distinct(cs):
    mus = sorted(cs.mus)
    if any(b == a for a, b in zip(mus, mus[1:])):
        raise DegenerateMuError("perturbation theory needs pairwise distinct mu_i")


def _dominance(phi, k):
    off = np.delete(np.abs(phi[k]), k)
    diag = np.delete(np.abs(np.diag(phi)), k)
    if off.size == 0 or off.max() == 0.0:
        return math.inf
    return float(diag.min() / off.max())


def delta_nu(m: ManifoldSpec, cs: CenterSet, k: int, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    if not 0 <= k < cs.n:
        raise IndexError(f"center {k} out of range")
    if cs.n == 1:
        return 0.0
    _check_distinct(cs)
    mu = cs.mus[k]
    phi = assemble(m, cs, mu, quad).entries
    ratio = _dominance(phi, k)
    if ratio < REGIME_RATIO:
        warnings.warn(f"off-diagonal coupling too strong for perturbation theory (ratio {ratio:.3g})",
                      OutOfRegimeWarning, stacklevel=2)
    slope = _dphi_value(m, 0.0, mu, quad)
    acc = 0.0
    for l in range(cs.n):
        if l != k:
            acc += phi[k, l] * phi[l, k] / phi[l, l]
    return float(acc / slope)


def tunneling_offdiag_asymptotic(m: ManifoldSpec, a_i, a_j, mu_k: float) -> float:
    """Large-separation form of Phi_ij(-mu_k^2): the short-time kernel
    (4 pi t)^{-D/2} F(d) e^{-d^2/4t - sigma t} integrated with the large-argument
    Bessel form, F = 1 (flat) or kappa d / sinh(kappa d) (H^3)."""
    if m.is_compact or (m.kind == "hyperbolic" and m.dim != 3):
        raise UnsupportedGeometryError(f"no exact short-time prefactor on {m.label}")
    d = m.distance(a_i, a_j)
    if not mu_k * d >= 3.0:
        raise ValueError("asymptotic form needs mu_k d >= 3")
    rate = math.sqrt(mu_k * mu_k + m.spectral_bottom)
    if m.kind == "flat":
        pref = 1.0
    else:
        x = m.scale * d
        pref = x / math.sinh(x)
    if m.dim == 2:
        x = rate * d
        return -pref * math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / (2.0 * math.pi)
    return -pref * math.exp(-rate * d) / (4.0 * math.pi * d)


def exact_shift(m: ManifoldSpec, cs: CenterSet, k: int, guess: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """nu_k - mu_k from the Schur complement Phi_kk = Phi_kR Phi_RR^{-1} Phi_Rk,
    solved directly in the shift so that tiny shifts keep full relative precision."""
    mu = cs.mus[k]
    rest = [l for l in range(cs.n) if l != k]

    def g(delta):
        phi = assemble(m, cs, mu + delta, quad).entries
        s = phi[k, rest] @ np.linalg.solve(phi[np.ix_(rest, rest)], phi[rest, k])
        return phi_diagonal_shifted(m, mu, delta, quad) - s

    if guess == 0.0:
        guess = 1e-300
    a, b = sorted((0.5 * guess, 2.0 * guess))
    ga, gb = g(a), g(b)
    for _ in range(60):
        if ga * gb <= 0:
            break
        a, b = (a - (b - a), b) if abs(ga) < abs(gb) else (a, b + (b - a))
        a = max(a, -0.999 * mu)
        ga, gb = g(a), g(b)
    else:
        raise BranchMatchError("could not bracket the exact shift")
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    return brentq(g, a, b, xtol=1e-300, rtol=1e-14, maxiter=300)


def compare_with_exact(m: ManifoldSpec, cs: CenterSet, k: int, quad: QuadratureConfig = DEFAULT_QUAD,
                       root_tol: float = 1e-10) -> PerturbationReport:
    _check_distinct(cs)
    mu = cs.mus[k]
    dn = delta_nu(m, cs, k, quad)
    states = solve_spectrum(m, cs, quad, root_tol)
    mus = sorted(cs.mus)
    gap = min((b - a for a, b in zip(mus, mus[1:])), default=math.inf)
    if not states:
        raise BranchMatchError("no bound states")
    best = min(states, key=lambda s: abs(s.nu - mu))
    if abs(best.nu - mu) > 0.5 * gap:
        raise BranchMatchError(f"no root within {0.5 * gap!r} of mu_k = {mu!r}")
    guess = best.nu - mu if best.nu != mu else dn
    exact = exact_shift(m, cs, k, guess, quad)
    rel = abs(dn - exact) / abs(exact) if exact != 0.0 else math.inf
    phi = assemble(m, cs, mu, quad).entries
    mu_d = cs.mu_d(m)
    return PerturbationReport(k, mu, dn, -2.0 * mu * dn, mu + exact, exact, rel,
                              mu_d ** 2 / min(cs.mus) ** 2, _dominance(phi, k))
