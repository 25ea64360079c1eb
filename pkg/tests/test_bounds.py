import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointdelta import (BoundConstants, CenterSet, ManifoldSpec, analytic_bound_for, analytic_lower_bound,
                        certified_lower_bound_numeric, default_constants, exact_constants, solve_spectrum)
from pointdelta.bounds import DegenerateFormulaError, calibrate_constants, envelope_dominates, gershgorin_certificate
from pointdelta.specfun import lambert_w0

F2, F3 = ManifoldSpec.flat(2), ManifoldSpec.flat(3)
H2, H3 = ManifoldSpec.hyperbolic(2, 1.0), ManifoldSpec.hyperbolic(3, 1.0)
S2 = ManifoldSpec.sphere(1.0)
PAIR = CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 1.0))


def test_gershgorin_examples():
    ok, margins = gershgorin_certificate(F3, PAIR, 2.0)
    assert ok
    np.testing.assert_allclose(margins, (1 - math.exp(-2)) / (4 * math.pi), rtol=1e-9)
    ok, margins = gershgorin_certificate(F3, PAIR, 1.2)
    assert not ok and np.all(margins < 0)


def test_certificate_symmetric_pair_is_tight():
    cert = certified_lower_bound_numeric(F3, PAIR)
    # row dominance fails exactly on the ground branch here
    assert cert.nu_star == pytest.approx(1.2784645427610737951, rel=1e-10)
    assert cert.E_star == pytest.approx(-cert.nu_star ** 2)
    assert cert.details["verified_above"]


def test_certificate_single_and_asymmetric():
    cert = certified_lower_bound_numeric(F3, CenterSet(((0, 0, 0),), (1.3,)))
    assert cert.nu_star == pytest.approx(1.3, rel=1e-10)
    cs = CenterSet(((0, 0, 0), (1, 0, 0)), (1.0, 2.0))
    cert = certified_lower_bound_numeric(F3, cs)
    assert cert.nu_star == pytest.approx(2.0 + lambert_w0(math.exp(-2.0)), rel=1e-9)
    assert cert.nu_star == pytest.approx(2.1200282, abs=1e-6)
    assert cert.nu_star >= solve_spectrum(F3, cs)[0].nu


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 5))
def test_certificate_bounds_ground_state(seed, n):
    rng = np.random.default_rng(seed)
    cs = CenterSet(tuple(tuple(rng.uniform(-2, 2, 3)) for _ in range(n)), tuple(rng.uniform(0.5, 2, n)))
    cert = certified_lower_bound_numeric(F3, cs)
    assert cert.nu_star >= solve_spectrum(F3, cs)[0].nu * (1 - 1e-10)


def test_certificate_monotone_in_separation():
    vals = [certified_lower_bound_numeric(F3, CenterSet(((0, 0, 0), (d, 0, 0)), (1.0, 1.0))).nu_star
            for d in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(vals) < 0) and vals[-1] > 1.0


def test_certificate_other_geometries():
    for m, pts in ((S2, ((0.5, 0.0), (1.5, 1.0))), (H3, ((0, 0, 1), (0.4, 0, 1.5))), (H2, ((0, 1), (0.5, 1.2)))):
        cs = CenterSet(pts, (1.0, 1.4))
        assert certified_lower_bound_numeric(m, cs).nu_star >= solve_spectrum(m, cs)[0].nu * (1 - 1e-10)


def test_analytic_single_center_collapses():
    for m in (F3, H3):
        cert = analytic_lower_bound("cartan_hadamard", m.dim, exact_constants(m), 1, 1.7, 0.0)
        assert cert.nu_star == 1.7
    sc = BoundConstants(C2=3.0, B=0.02, V=S2.volume)
    assert analytic_lower_bound("compact", 2, sc, 1, 0.9, 0.0).nu_star == 0.9


def test_analytic_cartan_hadamard_3d_exact():
    cert = analytic_lower_bound("cartan_hadamard", 3, exact_constants(F3), 2, 1.0, 1.0)
    w = 1.0 + lambert_w0(math.exp(-1.0))
    assert cert.nu_star == pytest.approx(w, rel=1e-12)
    assert cert.E_star == pytest.approx(-w * w, rel=1e-12)
    # on this configuration the closed form is the numeric certificate
    assert cert.nu_star == pytest.approx(certified_lower_bound_numeric(F3, PAIR).nu_star, rel=1e-9)


def test_analytic_bounds_dominate_ground_state():
    rng = np.random.default_rng(11)
    for m in (F2, F3, H3):
        consts = default_constants(m)
        for _ in range(5):
            n = int(rng.integers(2, 5))
            if m.kind == "flat":
                pts = tuple(tuple(rng.uniform(-2, 2, m.dim)) for _ in range(n))
            else:
                pts = tuple(tuple(rng.uniform(-1, 1, 2)) + (float(rng.uniform(0.5, 2)),) for _ in range(n))
            cs = CenterSet(pts, tuple(rng.uniform(0.5, 2, n)))
            nu_gr = solve_spectrum(m, cs)[0].nu
            assert analytic_bound_for(m, cs, consts).nu_star >= nu_gr * (1 - 1e-10)


def test_analytic_compact_chain():
    consts = default_constants(S2)
    cs = CenterSet(((0.5, 0.0), (1.5, 1.0)), (1.0, 1.5))
    nu_gr = solve_spectrum(S2, cs)[0].nu
    cert = analytic_bound_for(S2, cs, consts)
    num = certified_lower_bound_numeric(S2, cs)
    assert cert.method == "lambert_compact"
    assert cert.nu_star >= num.nu_star * (1 - 1e-9) >= nu_gr * (1 - 1e-9)


def test_analytic_literal_forms():
    consts = BoundConstants(C2=2.5, C=1.2, c=0.9, xi=0.0)
    with pytest.raises(DegenerateFormulaError):
        analytic_lower_bound("cartan_hadamard", 2, consts, 2, 1.0, 1.0, form="literal")
    # derived form is finite at xi = 0
    assert math.isfinite(analytic_lower_bound("cartan_hadamard", 2, consts, 2, 1.0, 1.0).nu_star)
    sc = BoundConstants(C2=3.0, B=0.02, V=S2.volume)
    assert analytic_lower_bound("compact", 2, sc, 3, 1.0, 0.5, form="literal").details["form"] == "literal"


def test_analytic_argument_errors():
    c = exact_constants(F3)
    with pytest.raises(ValueError):
        analytic_lower_bound("torus", 3, c, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        analytic_lower_bound("cartan_hadamard", 4, c, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        analytic_lower_bound("cartan_hadamard", 3, c, 0, 1.0, 1.0)
    with pytest.raises(ValueError):
        analytic_lower_bound("cartan_hadamard", 3, c, 2, 1.0, 0.0)
    with pytest.raises(ValueError):
        analytic_lower_bound("compact", 2, c, 2, 1.0, 1.0)


def test_bound_constants_validation():
    with pytest.raises(ValueError):
        BoundConstants(C2=1.5)
    with pytest.raises(ValueError):
        BoundConstants(C2=2.0)
    BoundConstants(C2=2.0, exact=True)
    with pytest.raises(ValueError):
        BoundConstants(C2=3.0, A=0.5)
    with pytest.raises(ValueError):
        BoundConstants(C2=3.0, B=-1.0)
    with pytest.raises(ValueError):
        BoundConstants(C2=3.0, xi=-0.1)
    c = BoundConstants(C2=3.0, B=0.1, V=2.0)
    assert BoundConstants.from_dict(c.to_dict()) == c


def test_calibrated_envelopes_dominate():
    for m in (S2, H2):
        consts = default_constants(m)
        assert consts.calibrated
        ok, worst = envelope_dominates(m, consts)
        assert ok and worst > 0.99
    ok, worst = envelope_dominates(F3, exact_constants(F3))
    assert ok and worst == pytest.approx(1.0, abs=1e-12)
    assert default_constants(F2) == exact_constants(F2)
    with pytest.raises(ValueError):
        exact_constants(S2)


def test_calibration_cache(tmp_path):
    path = str(tmp_path / "consts.json")
    a = calibrate_constants(S2, n=12, cache_path=path)
    b = calibrate_constants(S2, n=12, cache_path=path)
    assert a == b and a.B > 0
    # a smaller B must fail somewhere on the grid
    weaker = BoundConstants(C2=a.C2, A=a.A, B=a.B * 0.9, V=a.V)
    assert not envelope_dominates(S2, weaker, n=12)[0]
