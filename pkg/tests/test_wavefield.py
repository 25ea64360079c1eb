import math

import numpy as np
import pytest
from scipy.special import k0

from pointdelta import (CenterSet, ManifoldSpec, build_wavefield, decay_rate_fit, default_constants, evaluate_psi,
                        exact_constants, l2_norm, l2_norm_state, solve_spectrum)
from pointdelta.wavefield import (AtCenterError, InsufficientRangeError, drop_near_centers, geodesic_ray,
                                  h0_expectation_cutoff, pointwise_bound_check, polar_grid)

F2, F3 = ManifoldSpec.flat(2), ManifoldSpec.flat(3)
H3 = ManifoldSpec.hyperbolic(3, 1.0)
S2 = ManifoldSpec.sphere(1.0)


def _single(m, origin, mu=1.0):
    cs = CenterSet((origin,), (mu,))
    return cs, solve_spectrum(m, cs)[0]


def test_psi_closed_forms():
    cs, bs = _single(F3, (0, 0, 0))
    assert bs.norm_factor == pytest.approx(1 / (8 * math.pi), rel=1e-9)
    val = evaluate_psi(F3, cs, bs, (1, 0, 0))
    assert val == pytest.approx(math.sqrt(1 / (2 * math.pi)) * math.exp(-1), rel=1e-9)
    assert val == pytest.approx(0.1467627, abs=1e-7)
    cs, bs = _single(F2, (0, 0))
    assert bs.norm_factor == pytest.approx(1 / (4 * math.pi), rel=1e-9)
    val = evaluate_psi(F2, cs, bs, (0, 1))
    assert val == pytest.approx(k0(1.0) / math.sqrt(math.pi), rel=1e-9)
    assert val == pytest.approx(0.2375376, abs=1e-7)


def test_psi_radial_profile_flat3():
    cs, bs = _single(F3, (0, 0, 0), mu=1.7)
    rs = np.array([0.05, 0.4, 1.0, 3.0, 9.0])
    exact = np.sqrt(1.7 / (2 * math.pi)) * np.exp(-1.7 * rs) / rs
    field = build_wavefield(F3, cs, bs, [(r, 0, 0) for r in rs], exact=True)
    np.testing.assert_allclose(field.psi, exact, rtol=1e-9)
    # tabulated kernel route
    field = build_wavefield(F3, cs, bs, [(r, 0, 0) for r in rs])
    np.testing.assert_allclose(field.psi, exact, rtol=1e-5)


def test_psi_at_center_rejected():
    cs, bs = _single(F3, (0, 0, 0))
    with pytest.raises(AtCenterError):
        evaluate_psi(F3, cs, bs, (0, 0, 0))
    with pytest.raises(AtCenterError):
        build_wavefield(F3, cs, bs, [(0, 0, 0)])


def test_symmetric_pair_midpoint_and_mirror():
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (2.0, 2.0))
    gr, ex = solve_spectrum(F3, cs)
    mid = evaluate_psi(F3, cs, gr, (0.5, 0, 0))
    assert mid > 0
    assert evaluate_psi(F3, cs, gr, (0.5, 0.3, 0)) == pytest.approx(evaluate_psi(F3, cs, gr, (0.5, -0.3, 0)))
    # excited state is odd under reflection through the midplane
    for p in [(0.2, 0.1, 0.0), (-0.7, 0.4, 0.3), (1.6, -0.2, 0.5)]:
        q = (1.0 - p[0], p[1], p[2])
        a, b = evaluate_psi(F3, cs, ex, p), evaluate_psi(F3, cs, ex, q)
        assert abs(a + b) <= 1e-8 * max(abs(a), 1e-300)


def test_norm_factor_is_half_the_slope_over_nu():
    for m, pts in ((F3, ((0, 0, 0), (1.2, 0, 0))), (S2, ((0.4, 0.0), (1.6, 1.0))), (H3, ((0, 0, 1), (0.4, 0, 1.5)))):
        cs = CenterSet(pts, (1.0, 1.4))
        for s in solve_spectrum(m, cs):
            assert s.norm_factor == pytest.approx(s.omega_slope / (2 * s.nu), rel=1e-8)


@pytest.mark.parametrize("m,origin", [(F3, (0, 0, 0)), (F2, (0, 0))], ids=["flat3", "flat2"])
def test_l2_norm_flat_single(m, origin):
    cs, bs = _single(m, origin)
    field = build_wavefield(m, cs, bs, geodesic_ray(m, origin, [0.5, 1.0]))
    assert l2_norm(field) == pytest.approx(1.0, abs=1e-4)


def test_l2_norm_flat_pair_and_triangle():
    cs = CenterSet(((0, 0), (1, 0), (0.5, 0.9)), (1.0, 1.3, 0.8))
    for s in solve_spectrum(F2, cs):
        assert l2_norm_state(F2, cs, s) == pytest.approx(1.0, abs=1e-4)


def test_l2_norm_sphere_single():
    cs, bs = _single(S2, (0.7, 0.2))
    assert l2_norm_state(S2, cs, bs) == pytest.approx(1.0, abs=1e-3)


def test_l2_norm_hyperbolic3_pair():
    cs = CenterSet(((0, 0, 1), (0.5, 0, 1.3)), (1.0, 1.5))
    for s in solve_spectrum(H3, cs):
        assert l2_norm_state(H3, cs, s) == pytest.approx(1.0, abs=1e-3)


def test_ground_state_samples_positive():
    cs = CenterSet(((0.5, 0.0), (1.5, 1.0)), (1.0, 1.5))
    gr = solve_spectrum(S2, cs)[0]
    pts = drop_near_centers(S2, cs, polar_grid(S2, cs, 12, 12))
    field = build_wavefield(S2, cs, gr, pts)
    assert np.all(field.psi > 0)
    assert np.all(np.isfinite(field.psi))
    assert len(field.samples) == len(pts)


@pytest.mark.parametrize("m,origin,expect,tol", [
    (F3, (0, 0, 0), 1.0, 0.01),
    (F2, (0, 0), 1.0, 0.05),
    (H3, (0, 0, 1), math.sqrt(2.0), 0.05),
], ids=["flat3", "flat2", "hyperbolic3"])
def test_decay_rate_fit(m, origin, expect, tol):
    cs, bs = _single(m, origin)
    field = build_wavefield(m, cs, bs, geodesic_ray(m, origin, np.linspace(2.0, 8.0, 25)))
    assert decay_rate_fit(field, cs) == pytest.approx(expect, rel=tol)


def test_decay_rate_needs_range():
    cs, bs = _single(F3, (0, 0, 0))
    field = build_wavefield(F3, cs, bs, geodesic_ray(F3, (0, 0, 0), np.linspace(2.0, 3.0, 5)))
    with pytest.raises(InsufficientRangeError):
        decay_rate_fit(field, cs)
    cs, bs = _single(S2, (0.5, 0.0))
    field = build_wavefield(S2, cs, bs, [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])
    with pytest.raises(InsufficientRangeError):
        decay_rate_fit(field, cs)


def test_local_singularity():
    cs, bs = _single(F3, (0, 0, 0))
    ds = np.geomspace(1e-3, 1e-2, 8)
    field = build_wavefield(F3, cs, bs, [(d, 0, 0) for d in ds])
    slope = np.polyfit(np.log(ds), np.log(field.psi), 1)[0]
    assert slope == pytest.approx(-1.0, rel=0.1)
    cs, bs = _single(F2, (0, 0))
    field = build_wavefield(F2, cs, bs, [(d, 0) for d in ds])
    # psi ~ -ln(d) / (2 pi sqrt(n)) with n = 1/(4 pi)
    coef = np.polyfit(np.log(ds), field.psi, 1)[0]
    assert coef == pytest.approx(-1.0 / (2 * math.pi * math.sqrt(bs.norm_factor)), rel=0.1)


def test_pointwise_envelope_flat_saturates():
    for m, origin in ((F3, (0, 0, 0)), (F2, (0, 0))):
        cs, bs = _single(m, origin)
        field = build_wavefield(m, cs, bs, geodesic_ray(m, origin, np.linspace(0.5, 20.0, 30)), exact=True)
        rep = pointwise_bound_check(field, exact_constants(m))
        assert rep.passed and rep.n_checked == 30
    # deep tail: both sides negligible
    cs, bs = _single(F3, (0, 0, 0))
    field = build_wavefield(F3, cs, bs, [(20.0, 0, 0)], exact=True)
    assert abs(field.psi[0]) < 1e-9
    assert pointwise_bound_check(field, exact_constants(F3)).passed


def test_pointwise_envelope_sphere_calibrated():
    cs = CenterSet(((0.3, 0.0), (0.3 + math.pi / 2, 0.0)), (1.0, 1.0))
    consts = default_constants(S2)
    assert consts.calibrated
    for s in solve_spectrum(S2, cs):
        field = build_wavefield(S2, cs, s, drop_near_centers(S2, cs, polar_grid(S2, cs, 12, 12)))
        assert pointwise_bound_check(field, consts).passed


def test_h0_divergence_3d():
    cs, bs = _single(F3, (0, 0, 0))
    eps = [1e-2, 1e-4, 1e-6]
    vals = [h0_expectation_cutoff(F3, cs, bs, e) for e in eps]
    scaled = [v * math.sqrt(e) for v, e in zip(vals, eps)]
    limit = 2.0 / math.sqrt(math.pi)
    errs = [abs(s - limit) for s in scaled]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 5e-3 * limit
    ratio = h0_expectation_cutoff(F3, cs, bs, 0.25e-6) / vals[2]
    assert ratio == pytest.approx(2.0, rel=2e-3)


def test_h0_divergence_2d():
    cs, bs = _single(F2, (0, 0))
    eps = [1e-2, 1e-4, 1e-6]
    vals = [h0_expectation_cutoff(F2, cs, bs, e) for e in eps]
    # E_1(eps) - 1 = ln(1/eps) - gamma - 1 + O(eps)
    for v, e in zip(vals[1:], eps[1:]):
        assert v - math.log(1 / e) == pytest.approx(-np.euler_gamma - 1.0, abs=2 * e + 1e-8)
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(ValueError):
        h0_expectation_cutoff(F2, cs, bs, 0.0)
