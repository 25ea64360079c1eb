import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointdelta import (CenterSet, ManifoldSpec, assemble, check_interlacing, eigen_derivative_fh, eigensystem,
                        solve_spectrum)
from pointdelta.specfun import lambert_w0
from pointdelta.spectral import (branch_status, finite_difference_slope, ground_state_positivity, omega_branches,
                                 solve_branch, NoBoundStateOnBranch)

from conftest import base_point

FOUR_PI = 4.0 * math.pi
F2, F3 = ManifoldSpec.flat(2), ManifoldSpec.flat(3)


def _bisect(f, a, b, n=200):
    fa = f(a)
    for _ in range(n):
        c = 0.5 * (a + b)
        fc = f(c)
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def test_eigensystem_examples():
    es = eigensystem([[0.0]])
    assert es.eigenvalues.tolist() == [0.0] and es.vector(0).tolist() == [1.0]
    c = math.exp(-1) / FOUR_PI
    es = eigensystem([[0.0, -c], [-c, 0.0]])
    np.testing.assert_allclose(es.eigenvalues, [-c, c], rtol=1e-15)
    np.testing.assert_allclose(es.vector(0), [1 / math.sqrt(2)] * 2, rtol=1e-15)
    es = eigensystem(np.diag([0.1, 0.3]))
    np.testing.assert_allclose(es.eigenvalues, [0.1, 0.3])
    np.testing.assert_allclose(es.eigenvectors, np.eye(2))


def test_eigensystem_invariants():
    rng = np.random.default_rng(5)
    for n in (2, 4, 7):
        a = rng.normal(size=(n, n))
        a = a + a.T
        es = eigensystem(a)
        v = es.eigenvectors
        assert np.all(np.diff(es.eigenvalues) >= 0)
        np.testing.assert_allclose(a @ v, v * es.eigenvalues, atol=1e-12 * np.abs(a).max())
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
        idx = np.argmax(np.abs(v), axis=0)
        assert np.all(v[idx, np.arange(n)] > 0)
    with pytest.raises(ValueError):
        eigensystem([[0.0, 1.0], [0.0, 0.0]])


def test_single_center_every_geometry(geometry):
    cs = CenterSet((base_point(geometry),), (1.0,))
    states = solve_spectrum(geometry, cs)
    assert len(states) == 1
    tol = 1e-6 if geometry.dim == 2 and geometry.kind != "flat" else 1e-8
    assert states[0].nu == pytest.approx(1.0, abs=tol)
    assert states[0].omega_slope > 0 and states[0].norm_factor > 0


def test_symmetric_pair_examples():
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 1.0))
    states = solve_spectrum(F3, cs)
    assert len(states) == 1
    assert states[0].nu == pytest.approx(1 + lambert_w0(math.exp(-1)), rel=1e-10)
    assert states[0].energy == pytest.approx(-1.6344716, abs=1e-7)
    status = branch_status(F3, cs)
    assert isinstance(status[1], str)
    with pytest.raises(NoBoundStateOnBranch):
        solve_branch(F3, cs, 1)
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (2.0, 2.0))
    states = solve_spectrum(F3, cs)
    assert [s.nu for s in states] == pytest.approx([2 + lambert_w0(math.exp(-2)), 2 + lambert_w0(-math.exp(-2))],
                                                   rel=1e-10)
    assert states[0].nu == pytest.approx(2.1200282, abs=1e-7)
    assert states[1].nu == pytest.approx(1.8414057, abs=1e-7)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(0.25, 3.0))
def test_symmetric_pair_lambert_grid(mu, d):
    if not 0.2 <= mu * d <= 10:
        return
    cs = CenterSet(((0, 0, 0), (d, 0, 0)), (mu, mu))
    nu = solve_spectrum(F3, cs)[0].nu
    assert nu == pytest.approx(mu + lambert_w0(math.exp(-mu * d)) / d, rel=1e-9)


def test_against_bisection_oracle():
    # 2x2 flat determinant in closed form, bisected independently
    mu1, mu2, d = 1.0, 2.0, 1.0

    def det(nu):
        return (nu - mu1) * (nu - mu2) - math.exp(-2 * nu * d) / d ** 2

    states = solve_spectrum(F3, CenterSet(((0, 0, 0), (d, 0, 0)), (mu1, mu2)))
    nu_gr = _bisect(det, mu2, 5.0)
    assert states[0].nu == pytest.approx(nu_gr, rel=1e-10)
    assert ground_state_positivity(states[0], states).passed


def test_feynman_hellmann_examples():
    for nu in (0.5, 2.0):
        cs = CenterSet(((0, 0, 0),), (1.0,))
        es = eigensystem(assemble(F3, cs, nu))
        assert eigen_derivative_fh(F3, cs, es, 0) == pytest.approx(1 / FOUR_PI, rel=1e-9)
    cs = CenterSet(((0, 0),), (0.7,))
    es = eigensystem(assemble(F2, cs, 2.0))
    assert eigen_derivative_fh(F2, cs, es, 0) == pytest.approx(1 / FOUR_PI, rel=1e-9)
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 1.0))
    es = eigensystem(assemble(F3, cs, 1.0))
    val = eigen_derivative_fh(F3, cs, es, 0)
    assert val == pytest.approx((1 + math.exp(-1)) / FOUR_PI, rel=1e-9)
    assert val == pytest.approx(0.1088524, abs=1e-7)


def test_feynman_hellmann_vs_finite_differences(geometry):
    if geometry.kind == "flat":
        pts = [(0.0,) * geometry.dim, (0.9,) + (0.0,) * (geometry.dim - 1), (0.2, 1.1) + (0.0,) * (geometry.dim - 2)]
    elif geometry.kind == "sphere":
        pts = [(0.4, 0.0), (1.3, 0.5), (2.2, 3.0)]
    else:
        pts = [(0.0,) * (geometry.dim - 1) + (1.0,), (0.5,) + (0.0,) * (geometry.dim - 2) + (1.4,),
               (-0.4,) + (0.0,) * (geometry.dim - 2) + (0.6,)]
    cs = CenterSet(tuple(pts), (0.8, 1.2, 1.6))
    for nu in (0.7, 1.5):
        es = eigensystem(assemble(geometry, cs, nu))
        for k in range(3):
            fh = eigen_derivative_fh(geometry, cs, es, k)
            assert fh > 0
            assert fh == pytest.approx(finite_difference_slope(geometry, cs, nu, k), rel=1e-6)


def test_degenerate_branch_falls_back():
    # three equal centers on a triangle give a doubly degenerate pair
    h = math.sqrt(3) / 2
    cs = CenterSet(((0, 0, 0), (1, 0, 0), (0.5, h, 0)), (1.0, 1.0, 1.0))
    es = eigensystem(assemble(F3, cs, 1.2))
    assert es.is_degenerate(1)
    with pytest.warns(RuntimeWarning):
        val = eigen_derivative_fh(F3, cs, es, 1)
    assert val > 0


def test_root_residuals():
    rng = np.random.default_rng(2)
    for D in (2, 3):
        m = ManifoldSpec.flat(D)
        cs = CenterSet(tuple(tuple(rng.uniform(-1.5, 1.5, D)) for _ in range(4)), tuple(rng.uniform(0.6, 2, 4)))
        for s in solve_spectrum(m, cs):
            w = omega_branches(m, cs, s.nu)
            assert abs(w[s.branch_index]) <= 1e-10 * max(1.0, np.abs(w).max())
            assert s.omega_slope > 0 and s.norm_factor > 0


def test_interlacing_examples():
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 1.0))
    rep = check_interlacing(F3, cs)
    assert rep.passed and rep.deepening_strict
    assert rep.energy_full == pytest.approx(-1.6344716, abs=1e-7)
    assert rep.energy_sub == pytest.approx(-1.0, abs=1e-12)
    far = CenterSet(((0, 0, 0), (50, 0, 0)), (1.0, 1.0))
    rep = check_interlacing(F3, far)
    assert rep.passed and abs(rep.deepening_margin) < 1e-20
    line = CenterSet(((0, 0, 0), (1, 0, 0), (2, 0, 0)), (1.0, 1.0, 1.0))
    rep = check_interlacing(F3, line)
    assert rep.passed and rep.deepening_strict and rep.energy_sub < -1.0
    with pytest.raises(ValueError):
        check_interlacing(F3, CenterSet(((0, 0, 0),), (1.0,)))


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 31), st.sampled_from([2, 3]))
def test_interlacing_random(n, seed, D):
    rng = np.random.default_rng(seed)
    m = ManifoldSpec.flat(D)
    cs = CenterSet(tuple(tuple(rng.uniform(-1.5, 1.5, D)) for _ in range(n)), tuple(rng.uniform(0.5, 2, n)))
    rep = check_interlacing(m, cs)
    assert rep.eigen_interlacing and rep.passed


def test_ground_positivity_examples():
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (2.0, 2.0))
    states = solve_spectrum(F3, cs)
    rep = ground_state_positivity(states[0], states)
    assert rep.passed and rep.uniqueness_margin > 0.2
    np.testing.assert_allclose(states[0].amplitudes, [1 / math.sqrt(2)] * 2, rtol=1e-12)
    # excited branch changes sign
    assert states[1].amplitudes[0] * states[1].amplitudes[1] < 0
    single = solve_spectrum(F3, CenterSet(((0, 0, 0),), (1.0,)))
    assert ground_state_positivity(single[0]).passed and single[0].amplitudes.tolist() == [1.0]
    asym = solve_spectrum(F3, CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 2.0)))
    assert np.all(asym[0].amplitudes > 0)


def test_sphere_spectrum_interlaces():
    m = ManifoldSpec.sphere(1.0)
    cs = CenterSet(((0.5, 0.0), (1.5, 1.0)), (1.0, 1.5))
    states = solve_spectrum(m, cs)
    assert len(states) == 2
    assert states[0].nu > 1.5 and states[1].nu < 1.0
    assert np.all(states[0].amplitudes > 0)
