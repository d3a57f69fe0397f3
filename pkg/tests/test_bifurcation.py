import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmcb import (
    AnalysisConfig,
    Criterion,
    Direction,
    Divergence,
    DivergenceConfig,
    End,
    GeneralRigidityData,
    Grid,
    RicciSign,
    Summary,
    Verdict,
    WarpedModel,
    WarpingFunction,
    analyze,
    certify_corsc,
    certify_no_bifurcation,
    check_general_rigidity,
    divergence_test,
    explicit_spectrum,
    find_crossings,
    morse_index,
    scan,
    scan_crossings,
    shifted_eigenvalue,
    stability_h,
    theorem2_witness,
)
from cmcb.bifurcation import index_crossing_balance
from cmcb.errors import (
    DegenerateEndpoint,
    DegeneratePoint,
    DomainError,
    MissingFiberCurvature,
    SpectrumBoundExceeded,
    ZeroModeQueried,
)

from conftest import TWO_PI_SQ, ds_crossing_radius


# shifted_eigenvalue

def test_shifted_ds(ds, s2):
    assert shifted_eigenvalue(ds, s2, 6.0, -1.0) == pytest.approx(-2.0, rel=1e-14)


@pytest.mark.parametrize("r", [0.1, 1.0, 2.5, 4.0])
def test_shifted_pseudo_hyperbolic(pseudo, r):
    model, spec = pseudo
    for mu in (2.0, 6.0, 12.0):
        assert shifted_eigenvalue(model, spec, mu, r) == pytest.approx(mu * math.exp(-2 * r), rel=1e-14)


def test_shifted_zero_when_level_matches(ds, s2):
    r = ds_crossing_radius(3)
    assert abs(shifted_eigenvalue(ds, s2, 12.0, r)) < 1e-13


def test_shifted_zero_mode(ds, s2):
    with pytest.raises(ZeroModeQueried):
        shifted_eigenvalue(ds, s2, 0.0, -1.0)


def test_shifted_outside_domain(ds, s2):
    with pytest.raises(DomainError):
        shifted_eigenvalue(ds, s2, 2.0, 0.5)


# morse_index

def test_morse_index_ds(ds, s2):
    assert morse_index(ds, s2, -1.0) == 8


def test_morse_index_ds_counts_by_level(ds, s2):
    # h(-0.5) = 14: levels 2, 6, 12 lie below
    assert morse_index(ds, s2, -0.5) == 3 + 5 + 7


@pytest.mark.parametrize("r", [1.01, 1.5, 3.0, 50.0, 1e4])
def test_morse_index_ads_zero(ads, s2, r):
    assert morse_index(ads, s2, r) == 0


def test_morse_index_degenerate(ds, s2):
    with pytest.raises(DegeneratePoint):
        morse_index(ds, s2, -1.5)


def test_morse_index_explicit_bound(ds):
    spec = explicit_spectrum([(0, 1), (2, 3), (6, 5)])
    with pytest.raises(SpectrumBoundExceeded):
        morse_index(ds, spec, -1.0)


# crossings

def test_ds_crossings(ds, s2):
    events = find_crossings(ds, s2, (-1.45, -0.21), grid_points=2000, tol=1e-10)
    assert [e.multiplicity for e in events] == [7, 9, 11]
    assert [e.eigenvalue for e in events] == [12.0, 20.0, 30.0]
    for e, i in zip(events, (3, 4, 5)):
        assert abs(e.r_star - ds_crossing_radius(i)) <= 1e-10
        assert e.direction is Direction.UP and e.index_jump == e.multiplicity
        lo, hi = e.bracket
        assert hi - lo <= 1e-10
        assert (stability_h(ds, lo) - e.eigenvalue) * (stability_h(ds, hi) - e.eigenvalue) < 0


def test_ads_crossings_empty(ads, s2):
    assert find_crossings(ads, s2, (1.01, 100.0), grid_points=2000) == []


def test_pseudo_crossings_empty(pseudo):
    model, spec = pseudo
    assert find_crossings(model, spec, (0.1, 4.9), grid_points=200) == []


def test_down_crossings_when_reversed():
    # h decreasing: alpha = r**-1 style via graph form psi^2 = c / r, h = (r/2)(...)
    # use the power law mirrored: alpha = (6 - r)**2 on (1, 5), h = 4 (6-r)**2
    warp = WarpingFunction.geodesic(lambda r: (6 - r) ** 2, lambda r: -2 * (6 - r),
                                    lambda r: 2.0, (1.0, 5.0))
    model = WarpedModel(3, warp)
    spec = explicit_spectrum([(0, 1), (10, 2), (50, 4), (200, 1)])
    events = find_crossings(model, spec, (1.1, 4.9), grid_points=300, tol=1e-12)
    assert [e.eigenvalue for e in events] == [50.0, 10.0]
    assert all(e.direction is Direction.DOWN and e.index_jump == -e.multiplicity for e in events)
    np.testing.assert_allclose([e.r_star for e in events],
                               [6 - math.sqrt(50 / 4), 6 - math.sqrt(10 / 4)], atol=1e-12)


def test_touch_is_not_a_crossing():
    # h = 2 + (r - 1)**2 * 1e-12-ish: touches the level 2 at r = 1 without crossing
    warp = WarpingFunction.geodesic(lambda r: 1.0, lambda r: (r - 1.0) * 1e-6, lambda r: 0.0, (0.0, 2.0))
    model = WarpedModel(3, warp)
    spec = explicit_spectrum([(0, 1), (2e-12, 2), (5.0, 1)])
    crossings, touches = scan_crossings(model, spec, (0.1, 1.9), grid_points=181)
    assert crossings == []
    assert touches and touches[0].eigenvalue == 2e-12


def test_find_crossings_rejects_outside(ds, s2):
    with pytest.raises(DomainError):
        find_crossings(ds, s2, (-3.0, -0.5))


# witness

def test_witness_ds(ds, s2):
    w = theorem2_witness(ds, s2, -1.45, -0.5)
    # h(-1.45) ~ 6.14, h(-0.5) = 14: the smallest level in between is 12
    assert (w.eigenvalue, w.index_a, w.index_b) == (12.0, 8, 15)


def test_witness_ads_none(ads, s2):
    assert theorem2_witness(ads, s2, 2.0, 50.0) is None


def test_witness_degenerate_endpoint(ds, s2):
    with pytest.raises(DegenerateEndpoint):
        theorem2_witness(ds, s2, -1.5, -1.0)


# certificates

def test_ads_certified(ads, s2):
    cert = certify_no_bifurcation(ads, s2, Grid(1.001, 100.0, 10_000))
    assert cert.verdict is Verdict.CERTIFIED
    assert cert.criterion is Criterion.PROP23
    assert cert.margin == pytest.approx(0.03, rel=1e-12)
    assert "sampled" in cert.scope


def test_sinh_certificates_degenerate(sinh_model):
    model, spec = sinh_model
    grid = Grid(0.01, 2.99, 300)
    for cert in (certify_no_bifurcation(model, spec, grid), certify_corsc(model, spec, grid)):
        assert cert.verdict is Verdict.INCONCLUSIVE_DEGENERATE
        assert abs(cert.margin) <= 1e-12


def test_cusp_certificates(cusp):
    model, spec = cusp
    grid = Grid(0.1, 4.9, 200)
    prop = certify_no_bifurcation(model, spec, grid)
    assert prop.verdict is Verdict.CERTIFIED
    assert prop.margin == pytest.approx(TWO_PI_SQ, rel=1e-12)
    cor = certify_corsc(model, spec, grid)
    assert cor.verdict is Verdict.CERTIFIED
    assert cor.margin == pytest.approx(4 * TWO_PI_SQ, rel=1e-10)


def test_corsc_constant_alpha_flat_fiber():
    warp = WarpingFunction.geodesic(lambda r: 1.0, lambda r: 0.0, lambda r: 0.0, (0.0, 1.0))
    model = WarpedModel(3, warp, (0.0, 0.0))
    spec = explicit_spectrum([(0, 1), (0.7, 2)])
    cert = certify_corsc(model, spec, Grid(0.1, 0.9, 9))
    assert cert.verdict is Verdict.CERTIFIED
    assert cert.margin == pytest.approx(1.4)


def test_corsc_needs_fiber_curvature():
    warp = WarpingFunction.geodesic(math.exp, math.exp, math.exp, (0.0, 1.0))
    model = WarpedModel(3, warp)
    spec = explicit_spectrum([(0, 1), (2, 3)])
    with pytest.raises(MissingFiberCurvature):
        certify_corsc(model, spec, Grid(0.1, 0.9, 5))
    assert certify_corsc(model, spec, Grid(0.1, 0.9, 5), R_fiber_max=2.0).verdict is Verdict.CERTIFIED


@pytest.mark.parametrize("r_hi", [-0.9, -0.3])
def test_corsc_agrees_with_prop23_constant_fiber_curvature(ds, s2, r_hi):
    grid = Grid(-1.4, r_hi, 50)
    assert certify_corsc(ds, s2, grid).verdict is certify_no_bifurcation(ds, s2, grid).verdict


# general rigidity

def test_general_theorem1():
    cert = check_general_rigidity(GeneralRigidityData(mu1=3.0, Q=1.0, sff_norm_sq=0.0,
                                                      normal_ricci=0.0, n=3))
    assert (cert.criterion, cert.verdict, cert.margin) == (Criterion.THEOREM1, Verdict.CERTIFIED, 2.0)


def test_general_ds_point_not_certified():
    cert = check_general_rigidity(GeneralRigidityData(mu1=2.0, Q=8.0, sff_norm_sq=18.0,
                                                      normal_ricci=5.0, n=3))
    assert cert.verdict is Verdict.NOT_CERTIFIED
    assert cert.margin == -6.0


def test_general_corollary_iii_non_strict():
    cert = check_general_rigidity(GeneralRigidityData(
        mu1=2.0, Q=5.0, sff_norm_sq=2.0, normal_ricci=1.0, n=3,
        hypersurface_ricci=RicciSign.FLAT))
    assert cert.criterion is Criterion.COROLLARY1_III
    assert cert.verdict is Verdict.CERTIFIED
    assert cert.margin == 0.0


def test_general_corollary_i_and_ii():
    convex = GeneralRigidityData(mu1=1.0, Q=5.0, sff_norm_sq=1.0, normal_ricci=1.0, n=3,
                                 hypersurface_convex=True, hypersurface_ricci=RicciSign.NONPOSITIVE)
    assert check_general_rigidity(convex).criterion is Criterion.COROLLARY1_I
    ricci = GeneralRigidityData(mu1=1.0, Q=5.0, sff_norm_sq=2.0, normal_ricci=-1.0, n=3)
    cert = check_general_rigidity(ricci)
    assert cert.criterion is Criterion.COROLLARY1_II and cert.margin == 0.0


def test_general_data_validation():
    with pytest.raises(ValueError):
        GeneralRigidityData(mu1=0.0, Q=0.0, sff_norm_sq=0.0, normal_ricci=0.0, n=3)


# divergence

def test_divergence_ds(ds, s2):
    assert divergence_test(ds, End.UPPER, spectrum=s2) is Divergence.DIVERGENT
    assert divergence_test(ds, End.LOWER, spectrum=s2) is not Divergence.DIVERGENT


def test_divergence_power_law(power):
    model, spec = power
    wide = WarpedModel(3, WarpingFunction.geodesic(
        model.warp.alpha, model.warp.dalpha, model.warp.ddalpha, (1.0, math.inf)))
    assert divergence_test(wide, End.UPPER, spectrum=spec) is Divergence.DIVERGENT


@pytest.mark.parametrize("end", list(End))
def test_divergence_pseudo_bounded(pseudo, end):
    model, spec = pseudo
    assert divergence_test(model, end, spectrum=spec) is Divergence.BOUNDED


def test_divergence_config_validation():
    with pytest.raises(ValueError):
        DivergenceConfig(samples=4)
    with pytest.raises(ValueError):
        DivergenceConfig(growth_factor=1.5)


# properties

@settings(max_examples=60, deadline=None)
@given(st.floats(-1.5, -0.01), st.floats(-1.5, -0.01))
def test_index_monotone_in_h(ds, s2, r1, r2):
    try:
        i1, i2 = morse_index(ds, s2, r1), morse_index(ds, s2, r2)
    except (DegeneratePoint, DomainError):
        return
    h1, h2 = stability_h(ds, r1), stability_h(ds, r2)
    if h1 <= h2:
        assert i1 <= i2
    else:
        assert i1 >= i2


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, -0.05))
def test_shifted_ordering(ds, s2, r):
    try:
        values = [v for v, _ in s2.nonzero_up_to(200)]
        shifted = [shifted_eigenvalue(ds, s2, v, r) for v in values]
    except DomainError:
        return
    assert all(a < b for a, b in zip(shifted, shifted[1:]))


def test_index_crossing_consistency(ds, s2):
    rng = np.random.default_rng(7)
    lo, hi = ds.warp.clamped
    hi = -0.05
    checked = 0
    while checked < 30:
        a, b = sorted(rng.uniform(lo, hi, size=2))
        if b - a < 1e-3:
            continue
        try:
            ia, ib = morse_index(ds, s2, a), morse_index(ds, s2, b)
        except DegeneratePoint:
            continue
        events = find_crossings(ds, s2, (a, b), grid_points=500)
        assert ib - ia == index_crossing_balance(events)
        checked += 1


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_gauge_invariance(ds, s2, c):
    model, spec = ds.rescaled(c), s2.scaled(1 / c ** 2)
    base = find_crossings(ds, s2, (-1.45, -0.21), tol=1e-12)
    scaled = find_crossings(model, spec, (-1.45, -0.21), tol=1e-12)
    assert len(base) == len(scaled)
    for e, f in zip(base, scaled):
        assert abs(e.r_star - f.r_star) <= 1e-10
        assert e.multiplicity == f.multiplicity
    for r in (-1.2, -0.7, -0.3):
        assert shifted_eigenvalue(model, spec, 2 / c ** 2, r) == pytest.approx(
            shifted_eigenvalue(ds, s2, 2.0, r), rel=1e-12)


def test_certified_implies_no_crossings(ads, classical, s2, cusp):
    cases = [(ads, s2, Grid(1.001, 100.0, 2000)), (classical, s2, Grid(2.001, 100.0, 2000)),
             (cusp[0], cusp[1], Grid(0.1, 4.9, 200))]
    for model, spec, grid in cases:
        assert certify_no_bifurcation(model, spec, grid).verdict is Verdict.CERTIFIED
        assert find_crossings(model, spec, (grid.r_min, grid.r_max), grid.points) == []


def test_scan_samples(ds, s2):
    samples = scan(ds, s2, Grid(-1.45, -0.21, 101))
    assert len(samples) == 101
    assert all(a.r < b.r for a, b in zip(samples, samples[1:]))
    assert samples[0].alpha_sq == pytest.approx(1.45 ** 2)


def test_scan_threads_match(ds, s2, monkeypatch):
    grid = Grid(-1.45, -0.21, 400)
    serial = scan(ds, s2, grid, workers=1)
    monkeypatch.setenv("CMCB_THREADS", "4")
    assert scan(ds, s2, grid) == serial


# analyze

def _report(model, spec, grid):
    return analyze(model, spec, AnalysisConfig(grid))


def test_analyze_ds(ds, s2):
    rep = _report(ds, s2, Grid(-1.45, -0.21, 2000))
    assert rep.summary is Summary.BIFURCATION_FOUND
    assert len(rep.crossings) >= 3
    assert rep.divergence_by_end["upper"] is Divergence.DIVERGENT
    assert any("infinitely many" in n for n in rep.notes)
    assert rep.status == "ok"


def test_analyze_ads(ads, s2):
    rep = _report(ads, s2, Grid(1.001, 100.0, 2000))
    assert rep.summary is Summary.RIGID_CERTIFIED and rep.crossings == []


def test_analyze_sinh(sinh_model):
    rep = _report(*sinh_model, Grid(0.01, 2.99, 200))
    assert rep.summary is Summary.DEGENERATE
    assert rep.status == "degenerate"


def test_analyze_records_errors(ds):
    spec = explicit_spectrum([(0, 1), (2, 3), (6, 5)])
    rep = _report(ds, spec, Grid(-1.45, -0.21, 100))
    assert rep.status == "error"
    assert any("SpectrumBoundExceeded" in e for e in rep.errors)
    assert rep.certificates


def test_analyze_deterministic(ds, s2):
    grid = Grid(-1.45, -0.21, 500)
    a = json.dumps(_report(ds, s2, grid).to_dict(), sort_keys=True)
    b = json.dumps(_report(ds, s2, grid).to_dict(), sort_keys=True)
    assert a == b
