"""Lower bounds on the ground-state energy.

The numeric certificate finds the smallest nu beyond which Phi(-nu^2) is
strictly diagonally dominant, so no eigenvalue branch can vanish there.
The analytic bounds replace the entries by heat-kernel envelopes and the
Bessel/log inequalities, which gives closed Lambert-W forms.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .manifold import ManifoldSpec
from .principal import CenterSet, assemble
from .quadrature import DEFAULT_QUAD, QuadratureConfig
from .specfun import lambert_w0


class NoCertificateError(RuntimeError):
    """Diagonal dominance never sets in inside the search window."""


class DegenerateFormulaError(ValueError):
    """The requested closed form is undefined for these constants."""


@dataclass(frozen=True)
class BoundConstants:
    """Heat-kernel envelope constants.

    upper off-diagonal: compact 4A[1/V + B t^{-D/2}] e^{-d^2/(2 C2 t)},
                        Cartan-Hadamard C (4 pi t)^{-D/2} e^{-d^2/(2 C2 t)}
    lower diagonal:     compact (4 pi t)^{-D/2}, Cartan-Hadamard c (4 pi t)^{-D/2} e^{-xi t}
    """
    C2: float
    A: float = 1.0
    A_prime: float | None = None
    B: float | None = None
    C: float | None = None
    c: float | None = None
    xi: float = 0.0
    V: float | None = None
    exact: bool = False  # proven for the exact kernel (allows C2 = 2)
    calibrated: bool = False
    provenance: str = "user"

    def __post_init__(self):
        if not self.C2 >= 2.0:
            raise ValueError("C2 must be at least 2")
        if self.C2 == 2.0 and not self.exact:
            raise ValueError("C2 = 2 requires constants proven for the exact kernel (exact=True)")
        if not self.A >= 1.0:
            raise ValueError("A must be at least 1")
        for name in ("A_prime", "B", "C", "c", "V"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if not self.xi >= 0.0:
            raise ValueError("xi must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundConstants":
        return cls(**data)


@dataclass(frozen=True)
class BoundCertificate:
    nu_star: float
    method: str
    details: dict = field(default_factory=dict)

    @property
    def E_star(self) -> float:
        return -self.nu_star ** 2


# ---------------------------------------------------------------- numeric certificate

def gershgorin_certificate(m: ManifoldSpec, cs: CenterSet, nu: float, quad: QuadratureConfig = DEFAULT_QUAD):
    """(dominant, margins) with margins_i = Phi_ii - sum_{j != i} |Phi_ij|."""
    phi = assemble(m, cs, nu, quad).entries
    diag = np.diag(phi)
    off = np.abs(phi).sum(axis=1) - np.abs(diag)
    margins = diag - off
    return bool(np.all(diag > 0) and np.all(margins > 0)), margins


def _min_margin(m, cs, nu, quad):
    return float(np.min(gershgorin_certificate(m, cs, nu, quad)[1]))


def certified_lower_bound_numeric(m: ManifoldSpec, cs: CenterSet, quad: QuadratureConfig = DEFAULT_QUAD,
                                  tol: float = 1e-13, max_doublings: int = 10) -> BoundCertificate:
    """Smallest nu_* with Phi(-nu^2) strictly diagonally dominant for all nu > nu_*.

    The diagonal grows and the off-diagonal magnitudes shrink with nu, so the
    smallest row margin is increasing and a single root search is sound.
    E_gr >= -nu_*^2.
    """
    scale = max(max(cs.mus), cs.mu_d(m))
    lo = max(1e-6, 0.01 * min(cs.mus))
    f_lo = _min_margin(m, cs, lo, quad)
    if f_lo > 0:
        return BoundCertificate(lo, "gershgorin_numeric", {"note": "dominant at the bottom of the window"})
    a = lo
    for u in sorted(set(cs.mus)):
        if u <= a:
            continue
        fu = _min_margin(m, cs, u, quad)
        if fu == 0.0:
            # dominance holds for every nu above u only if the margin turns positive there
            if _min_margin(m, cs, u * (1.0 + 1e-9), quad) > 0:
                return _finish(m, cs, u, quad)
        if fu > 0:
            break
        a = u
    hi = max(2.0 * scale, a * 2.0)
    hi_max = 2.0 ** max_doublings * scale
    while _min_margin(m, cs, hi, quad) <= 0:
        if hi >= hi_max:
            raise NoCertificateError(f"no diagonal dominance up to nu = {hi!r}")
        a = hi
        hi = min(2.0 * hi, hi_max)
    b = hi
    for u in sorted(set(cs.mus)):
        if a < u < b and _min_margin(m, cs, u, quad) > 0:
            b = u
    nu = brentq(lambda x: _min_margin(m, cs, x, quad), a, b, xtol=tol, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    return _finish(m, cs, nu, quad)


def _finish(m, cs, nu, quad):
    ok, margins = gershgorin_certificate(m, cs, nu * (1.0 + 1e-6), quad)
    return BoundCertificate(float(nu), "gershgorin_numeric",
                            {"verified_above": bool(ok), "row_margins": [float(v) for v in margins]})


# ---------------------------------------------------------------- analytic forms

def _require(constants, *names):
    for n in names:
        if getattr(constants, n) is None:
            raise ValueError(f"constant {n} is required for this bound")


def _lambert(arg):
    if arg < -math.exp(-1.0):
        raise DegenerateFormulaError(f"Lambert-W argument {arg!r} below -1/e")
    return float(lambert_w0(arg))


def analytic_lower_bound(m_class: str, D: int, constants: BoundConstants, N: int, mu_max: float, mu_d: float,
                         form: str = "derived") -> BoundCertificate:
    """Closed-form Lambert-W lower bound on the ground-state energy.

    mu_max is the largest mu_i and mu_d = 1/d with d the smallest center
    separation.  form="derived" uses the consistently re-derived natural-unit
    constants (sound); form="literal" keeps the alternative grouping of the
    compact-case constants (an extra (4 pi)^{-D/2} on B, a 1/pi diagonal slope in
    D = 2, mixed e^{-z}/e^{-z/2} exponents in D = 3) and the logarithmic
    two-dimensional Cartan-Hadamard form.  It is kept for comparison only and is
    not guaranteed to be a bound.
    """
    if m_class not in ("compact", "cartan_hadamard"):
        raise ValueError(f"unknown manifold class {m_class!r}")
    if D not in (2, 3):
        raise ValueError("D must be 2 or 3")
    if N < 1 or int(N) != N:
        raise ValueError("N must be a positive integer")
    if form not in ("derived", "literal"):
        raise ValueError("form must be 'derived' or 'literal'")
    mu = float(mu_max)
    method = "lambert_compact" if m_class == "compact" else "lambert_cartan_hadamard"
    if N == 1:
        return BoundCertificate(mu, method, {"form": form, "lambert_argument": 0.0})
    if not mu_d > 0:
        raise ValueError("mu_d must be positive for N > 1")
    d = 1.0 / mu_d
    C2 = constants.C2
    s2 = math.sqrt(2.0 * C2)
    if m_class == "compact":
        _require(constants, "B", "V")
        A, B, V = constants.A, constants.B, constants.V
        if form == "derived":
            a = d / s2
            if D == 2:
                bracket = (d / V) * (1.0 + 1.0 / s2) + 4.0 * B * math.sqrt(C2 / 2.0) / d
                coeff = 8.0 * math.pi * A * bracket
            else:
                bracket = (d * d / V) * (1.0 + 1.0 / s2) + B * math.sqrt(2.0 * math.pi * C2) / d
                coeff = 16.0 * math.pi * A * bracket
            arg = (N - 1) * coeff * a * math.exp(-a * mu)
            nu = max(mu + _lambert(arg) / a, mu_d)
        elif D == 2:
            arg_c = (math.exp(-mu / (mu_d * s2)) / s2
                     * ((1.0 / (V * mu_d ** 2)) * (1.0 + 1.0 / s2) + 2.0 * s2 * B / (4.0 * math.pi))
                     * 4.0 * A * math.pi)
            arg = (N - 1) * arg_c
            nu = mu_d * (mu / mu_d + s2 * _lambert(arg))
        else:
            arg_c = (math.exp(-math.sqrt(2.0 / C2) * mu / mu_d) / math.sqrt(2.0 * math.pi * C2)
                     * ((1.0 / (V * mu_d ** 2)) * (1.0 + 1.0 / s2)
                        + math.sqrt(2.0 * math.pi * C2) * B * mu_d / (4.0 * math.pi) ** 1.5)
                     * 4.0 * A * (4.0 * math.pi) ** 1.5 / mu_d)
            arg = (N - 1) * arg_c
            nu = mu_d * (mu / mu_d + math.sqrt(C2 / 2.0) * _lambert(arg))
        return BoundCertificate(float(nu), method, {"form": form, "lambert_argument": arg})

    _require(constants, "C", "c")
    C, c, xi = constants.C, constants.c, constants.xi
    mup = math.sqrt(mu * mu + xi)
    if D == 3:
        a = d * math.sqrt(2.0 / C2)
        arg = (N - 1) * (C / c) * math.exp(-a * mup)
        nu = mup + _lambert(arg) / a
        return BoundCertificate(float(nu), method, {"form": form, "lambert_argument": arg})
    if form == "literal":
        if xi == 0.0:
            raise DegenerateFormulaError("the literal two-dimensional Cartan-Hadamard bound needs xi > 0 "
                                         "(its logarithm diverges at xi = 0)")
        arg = 2.0 * (N - 1) * C / math.log(xi / (mu * mu + xi))
        w = _lambert(arg)
        nu = math.sqrt(2.0 * C2) * mu_d * abs(w)
        return BoundCertificate(float(nu), method, {"form": form, "lambert_argument": arg})
    a = d / s2
    arg = (N - 1) * (C / c) * math.exp(-a * mup)
    nu = mup + _lambert(arg) / a
    return BoundCertificate(float(nu), method, {"form": form, "lambert_argument": arg})


def analytic_bound_for(m: ManifoldSpec, cs: CenterSet, constants: BoundConstants,
                       form: str = "derived") -> BoundCertificate:
    m_class = "compact" if m.is_compact else "cartan_hadamard"
    return analytic_lower_bound(m_class, m.dim, constants, cs.n, max(cs.mus), cs.mu_d(m), form)


# ---------------------------------------------------------------- constants

def exact_constants(m: ManifoldSpec) -> BoundConstants:
    """Constants the exact kernel satisfies: the Gaussian is its own envelope on
    flat space, and on H^3 (d/sinh d) e^{-kappa^2 t} <= 1."""
    if m.kind == "flat":
        return BoundConstants(C2=2.0, C=1.0, c=1.0, xi=0.0, exact=True, provenance="exact:flat")
    if m.kind == "hyperbolic" and m.dim == 3:
        return BoundConstants(C2=2.0, C=1.0, c=1.0, xi=m.spectral_bottom, exact=True, provenance="exact:hyperbolic3")
    raise ValueError(f"no exact constants for {m.label}; calibrate them")


def _safe_exp(x):
    return np.exp(np.minimum(x, 700.0))


def _calibration_grid(m: ManifoldSpec, n: int):
    L = m.scale if m.kind == "sphere" else (1.0 / m.scale if m.kind == "hyperbolic" else 1.0)
    ts = L * L * np.logspace(-3, 2, n)
    d_hi = math.pi * L if m.kind == "sphere" else 10.0 * L
    ds = np.concatenate([[0.0], np.logspace(math.log10(d_hi) - 3, math.log10(d_hi), n - 1)])
    return ts, ds


def default_cache_path() -> str:
    base = os.environ.get("POINTDELTA_CACHE") or os.path.join(os.path.expanduser("~"), ".cache", "pointdelta")
    return os.path.join(base, "calibration.json")


def _cache_key(m: ManifoldSpec, n: int, extra: dict) -> str:
    parts = [m.kind, str(m.dim), repr(float(m.scale)), str(n)] + [f"{k}={v!r}" for k, v in sorted(extra.items())]
    return "|".join(parts)


def _cache_load(path):
    if not path or not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cache_store(path, key, value):
    if not path:
        return
    data = _cache_load(path)
    data[key] = value
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def calibrate_constants(m: ManifoldSpec, n: int = 40, A: float = 1.0, C2: float | None = None,
                        delta: float = 0.05, cache_path: str | None = None) -> BoundConstants:
    """Smallest envelope constants that dominate the exact kernel on an n x n (t, d) log grid.

    sphere: A and C2 fixed (default C2 = 3), minimal B.
    hyperbolic plane: C2 = 2, minimal C, largest c with xi = sigma_1 + delta.
    """
    if m.kind == "flat" or (m.kind == "hyperbolic" and m.dim == 3):
        return exact_constants(m)
    if C2 is None:
        C2 = 3.0 if m.kind == "sphere" else 2.5
    extra = {"A": A, "C2": C2, "delta": delta}
    key = _cache_key(m, n, extra)
    cached = _cache_load(cache_path).get(key)
    if cached:
        return BoundConstants.from_dict(cached)
    ts, ds = _calibration_grid(m, n)
    if m.kind == "sphere":
        V = m.volume
        need = 0.0
        for t in ts:
            k = m.kernel(t, ds)
            req = (k / (4.0 * A) - 1.0 / V) * t * _safe_exp(ds * ds / (2.0 * C2 * t))
            need = max(need, float(np.max(req)))
        consts = BoundConstants(C2=C2, A=A, B=max(need, 1e-300) * (1.0 + 1e-9), V=V, calibrated=True,
                                provenance=f"calibrated:{n}x{n}")
    else:
        D = m.dim
        need = 0.0
        low = math.inf
        xi = m.spectral_bottom + delta * m.scale ** 2
        for t in ts:
            k = m.kernel(t, ds)
            with np.errstate(divide="ignore"):
                logreq = np.log(k) + (D / 2) * math.log(4.0 * math.pi * t) + ds * ds / (2.0 * C2 * t)
            # entries where the kernel underflowed carry no information
            need = max(need, float(np.exp(np.max(np.where(k > 0, logreq, -np.inf)))))
            low = min(low, float(k[0] * (4.0 * math.pi * t) ** (D / 2) * math.exp(xi * t)))
        consts = BoundConstants(C2=C2, C=need * (1.0 + 1e-9), c=low * (1.0 - 1e-9), xi=xi, calibrated=True,
                                provenance=f"calibrated:{n}x{n}")
    _cache_store(cache_path, key, consts.to_dict())
    return consts


def default_constants(m: ManifoldSpec, cache_path: str | None = None) -> BoundConstants:
    if m.kind == "flat" or (m.kind == "hyperbolic" and m.dim == 3):
        return exact_constants(m)
    return calibrate_constants(m, cache_path=cache_path)


def envelope_dominates(m: ManifoldSpec, constants: BoundConstants, n: int = 40, rtol: float = 1e-12) -> tuple:
    """(ok, worst ratio kernel/envelope) on the calibration grid.

    rtol absorbs rounding where the envelope is the kernel itself (flat space).
    """
    from .manifold import kernel_bound_envelope

    ts, ds = _calibration_grid(m, n)
    worst = 0.0
    for t in ts:
        k = m.kernel(t, ds)
        env = kernel_bound_envelope(m, "upper_offdiag", t, ds, constants)
        live = (k > 0) & (env > 0)
        ratio = np.where(live, k / np.where(live, env, 1.0), np.where((k > 0) & (env <= 0), np.inf, 0.0))
        worst = max(worst, float(np.max(ratio)))
    return worst <= 1.0 + rtol, worst
