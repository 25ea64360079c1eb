"""Eigenvalue branches of the principal matrix and the bound states they produce.

Bound states sit at the zeros of the sorted eigenvalue branches
omega^k(nu).  Each branch increases in nu, so each branch has at most one
zero.  The roots are bracketed on a scan and then refined with brentq.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .manifold import ManifoldSpec
from .principal import CenterSet, PrincipalMatrix, assemble, dphi_matrix, norm_bracket_matrix
from .quadrature import DEFAULT_QUAD, QuadratureConfig

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9
MAX_DOUBLINGS = 10


class EigenConvergenceError(RuntimeError):
    """The symmetric eigensolver failed."""


class DegenerateBranchError(ValueError):
    """Two eigenvalue branches coincide at the requested nu."""


class NoBoundStateOnBranch(LookupError):
    """A branch has no zero inside the scan window."""

    def __init__(self, k, reason):
        super().__init__(f"no bound state on branch {k}: {reason}")
        self.k, self.reason = k, reason


@dataclass(frozen=True)
class EigenSystem:
    nu: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)  # columns

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def is_degenerate(self, k: int, tol: float = DEGENERACY_TOL) -> bool:
        scale = tol * max(self.norm, 1e-300)
        w = self.eigenvalues
        lo = k > 0 and w[k] - w[k - 1] <= scale
        hi = k < w.size - 1 and w[k + 1] - w[k] <= scale
        return bool(lo or hi)


@dataclass(frozen=True)
class BoundState:
    branch_index: int
    nu: float
    amplitudes: np.ndarray = field(repr=False)
    omega_slope: float
    norm_factor: float
    residual: float = 0.0

    @property
    def energy(self) -> float:
        return -self.nu * self.nu


def _orient(vecs):
    # largest-magnitude component positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigensystem(phi) -> EigenSystem:
    if isinstance(phi, PrincipalMatrix):
        nu, mat = phi.nu, phi.entries
    else:
        nu, mat = float("nan"), np.asarray(phi, dtype=float)
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("principal matrix must be square")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(mat).max())):
        raise ValueError("principal matrix must be symmetric")
    try:
        w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return EigenSystem(nu, w, _orient(v))


class _Branches:
    """Cached evaluations of the sorted eigenvalues of Phi(-nu^2)."""

    def __init__(self, m, cs, quad, workers):
        self.m, self.cs, self.quad, self.workers = m, cs, quad, workers
        self._cache = {}

    def system(self, nu: float) -> EigenSystem:
        nu = float(nu)
        es = self._cache.get(nu)
        if es is None:
            es = eigensystem(assemble(self.m, self.cs, nu, self.quad, self.workers))
            self._cache[nu] = es
        return es

    def omega(self, k: int, nu: float) -> float:
        return float(self.system(nu).eigenvalues[k])


def scan_window(cs: CenterSet, m: ManifoldSpec):
    mu_max = max(cs.mus)
    scale = max(mu_max, cs.mu_d(m))
    lo = max(1e-6, 0.01 * min(cs.mus))
    return lo, 2.0 * scale, 2.0 ** MAX_DOUBLINGS * scale


def _bracket(br: _Branches, k: int, m, cs):
    lo, hi, hi_max = scan_window(cs, m)
    f_lo = br.omega(k, lo)
    if f_lo >= 0.0:
        raise NoBoundStateOnBranch(k, "branch is non-negative at the bottom of the window (threshold)")
    # the renormalization scales are natural probe points
    probes = sorted(u for u in set(cs.mus) if lo < u < hi)
    a, fa = lo, f_lo
    for p in probes:
        fp = br.omega(k, p)
        if fp == 0.0:
            return p, p
        if fp > 0.0:
            return a, p
        a, fa = p, fp
    while True:
        f_hi = br.omega(k, hi)
        if f_hi == 0.0:
            return hi, hi
        if f_hi > 0.0:
            return a, hi
        if hi >= hi_max:
            raise NoBoundStateOnBranch(k, f"no sign change up to nu = {hi!r}")
        a = hi
        hi = min(2.0 * hi, hi_max)


def solve_branch(m: ManifoldSpec, cs: CenterSet, k: int, quad: QuadratureConfig = DEFAULT_QUAD,
                 root_tol: float = 1e-10, workers: int | None = None, _br=None) -> BoundState:
    if not root_tol > 0:
        raise ValueError("root_tol must be positive")
    if not 0 <= k < cs.n:
        raise IndexError(f"branch {k} out of range for N = {cs.n}")
    br = _br or _Branches(m, cs, quad, workers)
    a, b = _bracket(br, k, m, cs)
    if a == b:
        nu = a
    else:
        nu = brentq(lambda x: br.omega(k, x), a, b, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    es = br.system(nu)
    resid = abs(float(es.eigenvalues[k]))
    if resid > root_tol * max(1.0, es.norm):
        # brentq stops on the nu tolerance; polish once more on a tighter bracket
        log.warning("branch %d root residual %.3e above tolerance", k, resid)
    amp = es.vector(k).copy()
    slope = _fh_contract(m, cs, es, k, quad)
    bracket = norm_bracket_matrix(m, cs, nu, quad)
    norm_factor = float(amp @ bracket @ amp)
    return BoundState(k, float(nu), amp, slope, norm_factor, resid)


def solve_spectrum(m: ManifoldSpec, cs: CenterSet, quad: QuadratureConfig = DEFAULT_QUAD,
                   root_tol: float = 1e-10, workers: int | None = None) -> list:
    """All bound states, ground state first (E_1 <= E_2 <= ...)."""
    br = _Branches(m, cs, quad, workers)
    states = []
    for k in range(cs.n):
        try:
            states.append(solve_branch(m, cs, k, quad, root_tol, workers, _br=br))
        except NoBoundStateOnBranch as exc:
            log.info("%s", exc)
    states.sort(key=lambda s: (s.energy, s.branch_index))
    return states


def branch_status(m: ManifoldSpec, cs: CenterSet, quad: QuadratureConfig = DEFAULT_QUAD,
                  root_tol: float = 1e-10) -> list:
    """Per branch: the bound state, or the reason there is none."""
    br = _Branches(m, cs, quad, None)
    out = []
    for k in range(cs.n):
        try:
            out.append(solve_branch(m, cs, k, quad, root_tol, _br=br))
        except NoBoundStateOnBranch as exc:
            out.append(exc.reason)
    return out


def _fh_contract(m, cs, es, k, quad):
    dphi = dphi_matrix(m, cs, es.nu, quad)
    a = es.vector(k)
    return float(a @ dphi @ a)


def omega_branches(m: ManifoldSpec, cs: CenterSet, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    return eigensystem(assemble(m, cs, nu, quad)).eigenvalues


def eigen_derivative_fh(m: ManifoldSpec, cs: CenterSet, es: EigenSystem, k: int,
                        quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """d omega^k / d nu = A^k . (d Phi / d nu) A^k.

    On a degenerate branch this falls back to central differences of the
    sorted eigenvalues, with a warning.
    """
    if not 0 <= k < es.n:
        raise IndexError(f"branch {k} out of range")
    if not (es.nu > 0 and math.isfinite(es.nu)):
        raise ValueError("eigensystem carries no nu")
    if es.is_degenerate(k):
        warnings.warn(f"branch {k} is degenerate at nu = {es.nu!r}; using finite differences",
                      RuntimeWarning, stacklevel=2)
        return finite_difference_slope(m, cs, es.nu, k, quad)
    return _fh_contract(m, cs, es, k, quad)


def finite_difference_slope(m: ManifoldSpec, cs: CenterSet, nu: float, k: int,
                            quad: QuadratureConfig = DEFAULT_QUAD, rel_step: float = 1e-5) -> float:
    h = rel_step * nu
    up = omega_branches(m, cs, nu + h, quad)[k]
    dn = omega_branches(m, cs, nu - h, quad)[k]
    return float((up - dn) / (2.0 * h))


@dataclass(frozen=True)
class InterlacingReport:
    passed: bool
    eigen_interlacing: bool
    eigen_margin: float
    energy_full: float
    energy_sub: float
    deepening_strict: bool
    deepening_margin: float
    single_center_bound: bool
    sampled_nu: tuple


def check_interlacing(m: ManifoldSpec, cs_full: CenterSet, quad: QuadratureConfig = DEFAULT_QUAD,
                      root_tol: float = 1e-10, nu_samples=None, energy_tol: float = 1e-20) -> InterlacingReport:
    """Cauchy interlacing of Phi against its leading (N x N) block, and
    ground-state deepening E_gr(N+1) < E_gr(N).
    """
    if cs_full.n < 2:
        raise ValueError("interlacing needs at least two centers")
    sub = cs_full.subset(range(cs_full.n - 1))
    if nu_samples is None:
        lo, hi, _ = scan_window(cs_full, m)
        nu_samples = np.geomspace(max(lo, 0.05 * min(cs_full.mus)), hi, 7)
    margin = math.inf
    for nu in nu_samples:
        phi = assemble(m, cs_full, float(nu), quad).entries
        lam = np.linalg.eigvalsh(phi)
        mu = np.linalg.eigvalsh(phi[:-1, :-1])
        tol = 1e-12 * max(1.0, np.abs(lam).max())
        gaps = np.concatenate([mu - lam[:-1], lam[1:] - mu])
        margin = min(margin, float(gaps.min()) + tol)
    full = solve_spectrum(m, cs_full, quad, root_tol)
    part = solve_spectrum(m, sub, quad, root_tol)
    e_full = full[0].energy if full else 0.0
    e_sub = part[0].energy if part else 0.0
    deep = e_sub - e_full
    single = min(-u * u for u in sub.mus)
    single_ok = e_sub <= single + 1e-12 * abs(single)
    eig_ok = margin >= 0.0
    strict = deep > 0.0
    passed = eig_ok and single_ok and (strict or deep >= -energy_tol)
    return InterlacingReport(passed, eig_ok, margin, e_full, e_sub, strict, deep, single_ok,
                             tuple(float(x) for x in nu_samples))


@dataclass(frozen=True)
class PositivityReport:
    passed: bool
    min_amplitude: float
    uniqueness_margin: float | None


def ground_state_positivity(bs: BoundState, others=(), root_tol: float = 1e-10) -> PositivityReport:
    """Ground amplitudes strictly positive and the ground root strictly the largest."""
    amin = float(np.min(bs.amplitudes))
    rest = [s.nu for s in others if s is not bs and s.branch_index != bs.branch_index]
    margin = None if not rest else bs.nu - max(rest)
    ok = amin > 0.0 and (margin is None or margin > root_tol)
    return PositivityReport(ok, amin, margin)
