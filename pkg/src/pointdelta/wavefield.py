"""Bound-state wave functions

    psi(x) = n^{-1/2} int_0^inf e^{-nu^2 t} sum_i A_i K_t(a_i, x) dt,
    n = sum_ij A_i A_j int_0^inf t K_t(a_i, a_j) e^{-nu^2 t} dt,

their L2 norm, decay rates, pointwise envelopes and the cut-off <H_0> diagnostic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ._geometry import Model
from ._kernels import _dyadic_rule
from .manifold import DiagonalDivergenceError, ManifoldSpec
from .principal import CenterSet, _offdiag_value, _peak
from .quadrature import DEFAULT_QUAD, QuadratureConfig, time_integral
from .specfun import bessel_k
from .spectral import BoundState


class AtCenterError(DiagonalDivergenceError):
    """psi was requested at an interaction center."""


class InsufficientRangeError(ValueError):
    """The samples do not span the range needed for a decay fit."""


class UnderResolvedGridWarning(RuntimeWarning):
    pass


def resolvent(m: ManifoldSpec, d: float, nu: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """int_0^inf e^{-nu^2 t} K_t(d) dt, d > 0."""
    return -_offdiag_value(m, float(d), float(nu), quad)


def effective_rate(m: ManifoldSpec, nu: float) -> float:
    return math.sqrt(nu * nu + m.spectral_bottom)


def _singular_part(dim, d):
    # leading behaviour of the resolvent at short distance
    if dim == 2:
        return -np.log(d) / (2.0 * math.pi)
    return 1.0 / (4.0 * math.pi * d)


class RadialResolvent:
    """Spline of log R(d) in log d, with the exact short-distance singularity
    below the first node and log-linear decay past the last one."""

    def __init__(self, m: ManifoldSpec, nu: float, d_max: float, quad: QuadratureConfig = DEFAULT_QUAD,
                 n_nodes: int = 240):
        self.m, self.nu = m, float(nu)
        rate = effective_rate(m, nu)
        length = 1.0 / rate
        if m.kind == "sphere":
            length = min(length, m.scale)
            d_max = min(d_max, math.pi * m.scale)
        self.d_lo = 1e-6 * length
        self.d_hi = max(d_max, 4.0 * self.d_lo)
        s = np.linspace(math.log(self.d_lo), math.log(self.d_hi), n_nodes)
        vals = np.array([resolvent(m, math.exp(x), nu, quad) for x in s])
        if np.any(vals <= 0):
            raise ValueError("resolvent profile must be positive")
        self._spline = CubicSpline(s, np.log(vals))
        self._lo_val = vals[0]
        self._hi_slope = (math.log(vals[-1]) - math.log(vals[-2])) / (math.exp(s[-1]) - math.exp(s[-2]))
        self._hi_log = math.log(vals[-1])

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        out = np.empty_like(d)
        lo = d < self.d_lo
        hi = d > self.d_hi
        mid = ~(lo | hi)
        out[mid] = np.exp(self._spline(np.log(d[mid])))
        if np.any(lo):
            D = self.m.dim
            out[lo] = self._lo_val + _singular_part(D, d[lo]) - _singular_part(D, self.d_lo)
        if np.any(hi):
            with np.errstate(under="ignore"):
                out[hi] = np.exp(self._hi_log + self._hi_slope * (d[hi] - self.d_hi))
        return out


def evaluate_psi(m: ManifoldSpec, cs: CenterSet, bs: BoundState, x, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    x = m.validate_point(x)
    total = 0.0
    for a, amp in zip(cs.points, bs.amplitudes):
        d = m.distance(a, x)
        if d < 1e-12:
            raise AtCenterError(f"psi diverges at the center {a!r}")
        total += amp * resolvent(m, d, bs.nu, quad)
    return total / math.sqrt(bs.norm_factor)


@dataclass(frozen=True)
class WaveField:
    manifold: ManifoldSpec
    centers: CenterSet
    state: BoundState
    points: tuple
    d_min: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    grid_spec: dict = field(default_factory=dict)
    quad: QuadratureConfig = DEFAULT_QUAD

    @property
    def samples(self):
        return list(zip(self.points, self.psi.tolist()))


def _profile_for(m, cs, bs, quad, extra=0.0):
    dist = cs.distances(m)
    rate = effective_rate(m, bs.nu)
    d_max = 30.0 / rate + float(dist.max()) + extra
    return RadialResolvent(m, bs.nu, d_max, quad)


def build_wavefield(m: ManifoldSpec, cs: CenterSet, bs: BoundState, points, quad: QuadratureConfig = DEFAULT_QUAD,
                    exact: bool = False, grid_spec=None) -> WaveField:
    """Sample psi at the given points.  exact=False evaluates through a radial
    resolvent spline, exact=True integrates every sample directly."""
    points = tuple(m.validate_point(p) for p in points)
    dmat = np.array([[m.distance(a, p) for a in cs.points] for p in points]).reshape(len(points), cs.n)
    if np.any(dmat < 1e-12):
        raise AtCenterError("a sample point coincides with a center")
    if exact:
        psi = np.array([evaluate_psi(m, cs, bs, p, quad) for p in points])
    else:
        prof = _profile_for(m, cs, bs, quad, float(dmat.max()))
        psi = (prof(dmat.ravel()).reshape(dmat.shape) @ bs.amplitudes) / math.sqrt(bs.norm_factor)
    return WaveField(m, cs, bs, points, dmat.min(axis=1), psi, dict(grid_spec or {}), quad)


def geodesic_ray(m: ManifoldSpec, origin, distances, direction: int = 0):
    """Points at the given geodesic distances from origin along a frame direction."""
    model = Model(m)
    P = model.embed(origin)
    U = model.tangent_basis(P)[direction]
    s = np.asarray(distances, dtype=float) / model.length
    X = model.exp(P, np.repeat(U[None, :], s.size, axis=0), s)
    return [tuple(float(c) for c in row) for row in model.chart(X)]


def polar_grid(m: ManifoldSpec, cs: CenterSet, n_r: int = 24, n_ang: int = 24, r_max: float | None = None):
    """Sample points for output: polar about the centroid (flat, in the first two
    coordinates), Gauss-Legendre in cos(theta) times uniform phi (sphere),
    geodesic polar about the first center (hyperbolic)."""
    if m.kind == "sphere":
        x, _ = np.polynomial.legendre.leggauss(n_r)
        th = np.arccos(-x)
        ph = 2.0 * math.pi * np.arange(n_ang) / n_ang
        return [(float(a), float(b)) for a in th for b in ph]
    if r_max is None:
        r_max = 6.0 * max(1.0 / min(cs.mus), cs.min_distance(m) if cs.n > 1 else 0.0)
    rs = r_max * (np.arange(1, n_r + 1) / n_r)
    angs = 2.0 * math.pi * np.arange(n_ang) / n_ang
    if m.kind == "flat":
        c = np.mean(np.array(cs.points), axis=0)
        pts = []
        for r in rs:
            for a in angs:
                p = c.copy()
                p[0] += r * math.cos(a)
                p[1] += r * math.sin(a)
                pts.append(tuple(float(v) for v in p))
        return pts
    model = Model(m)
    P = model.embed(cs.points[0])
    B = model.tangent_basis(P)
    U = np.array([math.cos(a) * B[0] + math.sin(a) * B[1] for a in angs])
    pts = []
    for r in rs:
        X = model.exp(P, U, np.full(len(angs), r / model.length))
        pts.extend(tuple(float(v) for v in row) for row in model.chart(X))
    return pts


def drop_near_centers(m: ManifoldSpec, cs: CenterSet, points, tol: float = 1e-9):
    return [p for p in points if min(m.distance(a, p) for a in cs.points) > tol]


# ---------------------------------------------------------------- L2 norm
#
# The manifold is split into the Voronoi cells of the centers.  Inside the
# cell of a_i, psi is smooth away from a_i, so it is integrated in geodesic
# polar coordinates about a_i; the cell boundary along each ray comes from
# the constant-curvature law of cosines.

_RAD_X, _RAD_W = _dyadic_rule(40, 12, False)


class _CellGeometry:
    def __init__(self, model: Model, cs: CenterSet, i: int, r_tail: float):
        self.model = model
        P = model.embed(cs.points[i])
        frame = model.tangent_basis(P)
        self.others = [j for j in range(cs.n) if j != i]
        deltas, comps = [], []
        for j in self.others:
            V, dl = model.direction(P, model.embed(cs.points[j]))
            deltas.append(dl)
            comps.append(np.array([float(model.inner(V, f)) for f in frame]))
        if comps:
            order = np.argsort(deltas)
            self.deltas = np.array(deltas)[order]
            self.comps = np.array(comps)[order]
            self.others = [self.others[k] for k in order]
        else:
            self.deltas = np.zeros(0)
            self.comps = np.zeros((0, model.dim))
        self.s_tail = r_tail / model.length
        if model.kind == "sphere":
            self.s_tail = math.pi

    def axis(self):
        # polar axis for 3-D direction sets: toward the nearest neighbor
        if self.comps.shape[0] and np.linalg.norm(self.comps[0]) > 0:
            return self.comps[0] / np.linalg.norm(self.comps[0])
        e = np.zeros(self.model.dim)
        e[0] = 1.0
        return e

    def reach(self, dirs):
        """(label, boundary distance) per direction; label -1 is the tail cut."""
        cosg = dirs @ self.comps.T if self.comps.shape[0] else np.zeros((dirs.shape[0], 0))
        cand = np.full((dirs.shape[0], 1 + self.deltas.size), self.s_tail)
        for k, dl in enumerate(self.deltas):
            cand[:, k + 1] = self.model.bisector(dl, cosg[:, k])
        lab = np.argmin(cand, axis=1) - 1
        return lab, cand[np.arange(dirs.shape[0]), lab + 1], cosg


def _segments(label_fn, lo, hi, n_scan):
    """Split [lo, hi] where the integer label changes, locating each change by bisection."""
    xs = np.linspace(lo, hi, n_scan + 1)
    labs = label_fn(xs)
    cuts = [lo]
    for k in np.flatnonzero(labs[1:] != labs[:-1]):
        a, b = xs[k], xs[k + 1]
        la = labs[k]
        for _ in range(60):
            c = 0.5 * (a + b)
            if label_fn(np.array([c]))[0] == la:
                a = c
            else:
                b = c
            if b - a <= 1e-14 * max(1.0, abs(b)):
                break
        cuts.append(0.5 * (a + b))
    cuts.append(hi)
    return np.array(cuts)


def _gl_on(cuts, order, max_len):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        n = max(1, int(math.ceil((b - a) / max_len)))
        edges = np.linspace(a, b, n + 1)
        for c, e in zip(edges[:-1], edges[1:]):
            h = 0.5 * (e - c)
            nodes.append(0.5 * (e + c) + h * x)
            weights.append(h * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _ray_integral(cell: _CellGeometry, i_amp, amps, prof, dirs, length):
    """sum over the rays of int_0^{reach} |psi_unnormalized|^2 J ds (model units)."""
    model = cell.model
    _, reach, cosg = cell.reach(dirs)
    s = reach[:, None] * _RAD_X[None, :]
    w = reach[:, None] * _RAD_W[None, :]
    val = i_amp * prof(s * length)
    for k, j in enumerate(cell.others):
        hv = 0.5 * (1.0 - cosg[:, k])[:, None]
        dj = model.third_side(s, cell.deltas[k], hv)
        val = val + amps[j] * prof(dj * length)
    dens = model.area_factor(s) * length ** model.dim
    return np.sum(w * val * val * dens, axis=1)


def _norm_sq(m, cs, bs, prof, r_tail, ang_order, n_phi):
    model = Model(m)
    amps = np.asarray(bs.amplitudes, dtype=float)
    total = 0.0
    for i in range(cs.n):
        cell = _CellGeometry(model, cs, i, r_tail)
        if m.dim == 2:
            def circle(a):
                return np.stack([np.cos(a), np.sin(a)], axis=1)

            cuts = _segments(lambda a: cell.reach(circle(a))[0], 0.0, 2.0 * math.pi, 1440)
            al, wl = _gl_on(cuts, ang_order, math.pi / 8)
            total += float(wl @ _ray_integral(cell, amps[i], amps, prof, circle(al), model.length))
            continue
        ax = cell.axis()
        # complete the axis to an orthonormal frame of the 3-D tangent space
        helper = np.eye(3)[np.argmin(np.abs(ax))]
        e1 = np.cross(ax, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(ax, e1)
        coaxial = all(np.linalg.norm(np.cross(c, ax)) < 1e-12 for c in cell.comps)
        phis = np.array([0.0]) if coaxial else 2.0 * math.pi * np.arange(n_phi) / n_phi
        wphi = 2.0 * math.pi / phis.size
        for ph in phis:
            perp = math.cos(ph) * e1 + math.sin(ph) * e2

            def sphere_dirs(u, perp=perp):
                return u[:, None] * ax[None, :] + np.sqrt(np.maximum(1.0 - u * u, 0.0))[:, None] * perp[None, :]

            cuts = _segments(lambda u: cell.reach(sphere_dirs(u))[0], -1.0, 1.0, 800)
            ul, wl = _gl_on(cuts, ang_order, 0.25)
            total += wphi * float(wl @ _ray_integral(cell, amps[i], amps, prof, sphere_dirs(ul), model.length))
    return total / bs.norm_factor


def l2_norm_state(m: ManifoldSpec, cs: CenterSet, bs: BoundState, quad: QuadratureConfig = DEFAULT_QUAD,
                  check: bool = True) -> float:
    rate = effective_rate(m, bs.nu)
    r_tail = 25.0 / rate
    dist = cs.distances(m)
    prof = RadialResolvent(m, bs.nu, r_tail + float(dist.max()) + 1.0, quad)
    fine = math.sqrt(_norm_sq(m, cs, bs, prof, r_tail, 24, 64))
    if check:
        coarse = math.sqrt(_norm_sq(m, cs, bs, prof, r_tail, 12, 32))
        if abs(fine - coarse) > 1e-2 * fine:
            warnings.warn(f"L2 norm grid under-resolved: {coarse!r} vs {fine!r}", UnderResolvedGridWarning,
                          stacklevel=2)
    return fine


def l2_norm(field: WaveField, m: ManifoldSpec | None = None) -> float:
    """(int |psi|^2 dvol)^{1/2} over the whole manifold for the state behind the field."""
    m = m or field.manifold
    return l2_norm_state(m, field.centers, field.state, field.quad)


# ---------------------------------------------------------------- decay and envelopes

def decay_weight(m: ManifoldSpec, d):
    """Square root of the geodesic-sphere area, which turns the single-center
    resolvent into a pure exponential at large d."""
    d = np.asarray(d, dtype=float)
    k = m.scale
    if m.kind == "flat":
        return np.sqrt(d) if m.dim == 2 else d
    if m.kind == "hyperbolic":
        return np.sqrt(np.sinh(k * d) / k) if m.dim == 2 else np.sinh(k * d) / k
    return np.sqrt(m.scale * np.sin(d / m.scale))


def decay_rate_fit(field: WaveField, cs: CenterSet | None = None, min_span: float | None = None) -> float:
    """Least-squares slope of -ln(w(d)|psi|) against the distance to the nearest center."""
    m = field.manifold
    if m.is_compact:
        raise InsufficientRangeError("decay rates are defined on non-compact geometries only")
    d = np.asarray(field.d_min, dtype=float)
    psi = np.abs(field.psi)
    ok = psi > 0
    d, psi = d[ok], psi[ok]
    if min_span is None:
        min_span = 6.0 / field.state.nu
    if d.size < 3 or d.max() - d.min() < min_span * (1.0 - 1e-9):
        raise InsufficientRangeError(f"samples span {d.max() - d.min() if d.size else 0.0!r}, need {min_span!r}")
    y = -np.log(decay_weight(m, d) * psi)
    slope, _ = np.polyfit(d, y, 1)
    return float(slope)


def expected_decay_rate(m: ManifoldSpec, nu: float) -> float:
    if m.kind == "flat":
        return nu
    if m.kind == "hyperbolic":
        return effective_rate(m, nu)
    raise ValueError("no decay rate on compact geometries")


def psi_envelope(m: ManifoldSpec, cs: CenterSet, bs: BoundState, constants, x) -> float:
    """Upper bound on |psi(x)| from the Gaussian heat-kernel envelope:
    int e^{-nu^2 t} t^{-p} e^{-b/t} dt = 2 (b/nu^2)^{(1-p)/2} K_{p-1}(2 nu sqrt(b))."""
    D = m.dim
    nu = bs.nu
    total = 0.0
    for a, amp in zip(cs.points, bs.amplitudes):
        d = m.distance(a, x)
        b = d * d / (2.0 * constants.C2)
        z = 2.0 * nu * math.sqrt(b)
        if z > 1400.0:
            continue
        sing = 2.0 * (b / nu ** 2) ** (0.5 - D / 4.0) * bessel_k(D / 2.0 - 1.0, z)
        if m.is_compact:
            flat_part = 2.0 * math.sqrt(b) / nu * bessel_k(1, z)
            term = 4.0 * constants.A * (flat_part / m.volume + constants.B * sing)
        else:
            term = constants.C * (4.0 * math.pi) ** (-D / 2.0) * sing
        total += abs(amp) * term
    return total / math.sqrt(bs.norm_factor)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    worst_margin: float
    worst_point: tuple | None
    n_checked: int


def pointwise_bound_check(field: WaveField, constants, rel_slack: float = 1e-9) -> EnvelopeReport:
    """|psi| <= envelope at every sample; margin = envelope - |psi| (relative slack for
    exactly saturated envelopes)."""
    m = field.manifold
    worst = math.inf
    where = None
    for p, v in zip(field.points, field.psi):
        env = psi_envelope(m, field.centers, field.state, constants, p)
        margin = env - abs(v) + rel_slack * max(env, abs(v))
        if margin < worst:
            worst, where = margin, p
    return EnvelopeReport(bool(worst >= 0.0), float(worst), where, len(field.points))


def h0_expectation_cutoff(m: ManifoldSpec, cs: CenterSet, bs: BoundState, epsilon_cutoff: float,
                          quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """<psi|H_0|psi> with the time integrals started at epsilon:
    n^{-1} sum_ij A_i A_j int_eps^inf K_t(a_i, a_j) e^{-nu^2 t} dt - nu^2."""
    eps = float(epsilon_cutoff)
    if not eps > 0:
        raise ValueError("epsilon_cutoff must be positive")
    nu2 = bs.nu ** 2
    dist = cs.distances(m)
    acc = 0.0
    for i in range(cs.n):
        for j in range(cs.n):
            d = float(dist[i, j])
            if m.is_compact:
                def g(s, d=d):
                    with np.errstate(under="ignore"):
                        return m.kernel_fluctuation(eps + s, d) * np.exp(-nu2 * (eps + s))

                val, _ = time_integral(g, nu2 + m.spectral_gap, quad, _peak(d, nu2))
                val += math.exp(-nu2 * eps) / (m.volume * nu2)
            else:
                rate = nu2 + m.spectral_bottom

                def g(s, d=d):
                    with np.errstate(under="ignore"):
                        return m.kernel(eps + s, d) * np.exp(-nu2 * (eps + s))

                val, _ = time_integral(g, rate, quad, _peak(d, rate))
            acc += bs.amplitudes[i] * bs.amplitudes[j] * val
    return acc / bs.norm_factor - nu2
