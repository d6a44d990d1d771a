import math

import numpy as np
import pytest

from wienerlab.boundary import (Accommodation, GeometricSetting,
                                accommodate_degeneracy, check_capacity_estimate,
                                eta_star, extract_radii, make_setting,
                                oscillation_alternative, verify_decay)
from wienerlab.capacity import WienerProfile, wiener_sum
from wienerlab.errors import AccommodationFailure, InsufficientScale
from wienerlab.geometry import backward_cylinder, build_domain
from wienerlab.phase import (DoublePhaseParams, ReductionConstants,
                             phase_constant, phase_zero)
from wienerlab.pde import SpaceTimeField, datum_constant, solve, datum_from_function
from oracles import brute_force_minimal_indices

RNG = np.random.default_rng(5)


def test_eta_star_values(params34):
    es = eta_star("p", params34, 1.0, 1.0, 1.0, 0.5)
    # gamma* r^p / (mu delta)^(p-2) with mu delta = 1
    assert es.value == pytest.approx(0.125)
    es_q = eta_star("q", params34, 1.0, 1.0, 1.0, 0.5, a_at_point=2.0)
    assert es_q.value == pytest.approx(1.0 / 32.0)
    with pytest.raises(ValueError):
        eta_star("q", params34, 1.0, 1.0, 1.0, 0.5, a_at_point=0.0)


def test_eta_star_parabolic_equivalence(params34):
    """eta* < r^2 iff mu delta >= gamma*^(1/(p-2)) r, both directions."""
    gamma_star = 2.0
    for _ in range(200):
        r = RNG.uniform(0.05, 1.0)
        mu_delta = RNG.uniform(0.01, 3.0)
        es = eta_star("p", params34, gamma_star, mu_delta, 1.0, r)
        threshold = gamma_star ** (1.0 / (params34.p - 2.0)) * r
        assert (es.value < r * r) == (mu_delta > threshold) or \
            math.isclose(es.value, r * r, rel_tol=1e-9)


def test_geometric_setting_invariants(params34):
    with pytest.raises(ValueError, match="eta <= r"):
        GeometricSetting(mode="p", gamma_star=1.0, mu=1.0, r=0.1, eta=0.02,
                         r0=1.0)
    with pytest.raises(ValueError, match="min"):
        GeometricSetting(mode="q", gamma_star=1.0, mu=1.0, r=0.1, eta=0.005,
                         r0=1.0, r_maximal=1.0, a_at_point=1.0)


def test_capacity_estimate_constant_w(params34):
    # w identically mu: the sup-average equals mu, so the ratio is delta <= 1
    constants = ReductionConstants()
    st = make_setting("p", params34, constants, mu=0.8, r=0.1, delta_val=0.6,
                      phase_r0=1.0)
    rep = check_capacity_estimate(st, 0.6, i_val=0.8)
    assert rep.ratio == pytest.approx(0.6)
    assert rep.ratio <= 1.0


def test_capacity_estimate_q_correction_vanishes(params34):
    constants = ReductionConstants()
    ratios = []
    for r_max in (1.0, 10.0, 100.0):
        st = make_setting("q", params34, constants, mu=0.8, r=0.01,
                          delta_val=0.6, phase_r0=1.0, a_at_point=1.0,
                          r_maximal=r_max)
        rep = check_capacity_estimate(st, 0.6, i_val=0.8)
        ratios.append(rep.ratio)
    # r/R -> 0 removes the correction: ratio converges to the p-style value
    assert abs(ratios[-1] - 0.6) < abs(ratios[0] - 0.6)
    assert ratios[-1] == pytest.approx(0.48 / 0.8, rel=1e-3)


def test_oscillation_alternative_branches(params34):
    constants = ReductionConstants(c_p=2.0)
    st = make_setting("p", params34, constants, mu=1.0, r=0.1, delta_val=1e-9,
                      phase_r0=1.0)
    branch, _ = oscillation_alternative(st, 0.0, 2.0)
    assert branch == "small-radius"
    # mu delta = 4 C_p r lands in the reduction branch
    st2 = make_setting("p", params34, constants, mu=8.0 * 2.0 * 0.1, r=0.1,
                       delta_val=0.5, phase_r0=1.0)
    branch, mu_prime = oscillation_alternative(st2, 0.5, 2.0)
    assert branch == "reduction"
    assert mu_prime == pytest.approx(st2.mu * (1 - 0.5 / 4.0))
    # q-mode threshold formula
    st3 = make_setting("q", params34, constants, mu=1.0, r=0.01,
                       delta_val=0.1, phase_r0=1.0, a_at_point=1.0,
                       r_maximal=0.5)
    thr = 4 * 2.0 * 0.01 + (4 * 2.0) ** (1 / 3.0) * 0.01 / 0.5
    branch, _ = oscillation_alternative(st3, 0.1, 2.0)
    assert (0.1 <= thr) == (branch == "small-radius")


# ------------------------------------------------------------ extract_radii

def test_extract_radii_constant_profile():
    seq = extract_radii(lambda r: 0.6, rho0=0.4, mu0=1.0, c1=2.0, c_bar=1.2,
                        gamma_tilde=1.0, mode_exponent=3.0, steps=8)
    assert seq.sigma == pytest.approx((1 - 1 / 4.0) / 2.0)
    np.testing.assert_array_equal(seq.indices, np.arange(9))
    np.testing.assert_allclose(seq.rho, 0.4 * seq.sigma ** np.arange(9))
    np.testing.assert_allclose(seq.mu, (1 - 1 / 4.0) ** np.arange(9))
    assert seq.property_1() and seq.property_2() and seq.property_3()
    assert np.all(2 * seq.eta[1:] <= seq.eta[:-1])
    assert math.isfinite(seq.gamma4_measured)


def test_extract_radii_power_profile():
    # sigma^0.1 = 0.907 >= 1/2: consecutive steps again
    seq = extract_radii(lambda r: r ** 0.1, rho0=0.4, mu0=2.0, c1=2.0,
                        c_bar=1.5, gamma_tilde=1.0, mode_exponent=3.0, steps=6)
    np.testing.assert_array_equal(seq.indices, np.arange(7))
    assert seq.property_1() and seq.property_2() and seq.property_3()


def test_extract_radii_staircase_matches_bruteforce():
    def stair(r):
        return 0.6 if r > 0.2 else 0.075

    seq = extract_radii(stair, rho0=0.4, mu0=1.0, c1=2.0, c_bar=0.5,
                        gamma_tilde=1.0, mode_exponent=3.0, steps=6)
    oracle = brute_force_minimal_indices(stair, 0.4, seq.sigma, 6)
    np.testing.assert_array_equal(seq.indices, oracle)
    assert seq.property_1() and seq.property_2() and seq.property_3()


def test_extract_radii_preconditions_and_truncation():
    with pytest.raises(ValueError, match=r"property \(1\)"):
        extract_radii(lambda r: 0.01, rho0=0.4, mu0=1.0, c1=2.0, c_bar=1.0,
                      gamma_tilde=1.0, mode_exponent=3.0)
    # delta collapsing to zero below a scale: sequence truncates with a flag
    def dying(r):
        return 0.6 if r > 0.1 else 0.0

    seq = extract_radii(dying, rho0=0.4, mu0=1.0, c1=2.0, c_bar=0.5,
                        gamma_tilde=1.0, mode_exponent=3.0, steps=10,
                        max_index_scan=40)
    assert seq.truncated
    with pytest.raises(ValueError, match="C1"):
        extract_radii(lambda r: 0.5, rho0=0.4, mu0=1.0, c1=0.9, c_bar=0.1,
                      gamma_tilde=1.0, mode_exponent=3.0)


# ------------------------------------------------------ accommodation

def synthetic_profile(r0, deltas):
    radii = r0 * 0.5 ** np.arange(len(deltas))
    deltas = np.asarray(deltas, float)
    return WienerProfile(exponent=3.0, center=(0.0, 0.0), radii=radii,
                         deltas=deltas,
                         partial_sums=np.cumsum(deltas) * math.log(2),
                         cap_num=deltas, cap_den=np.ones(len(deltas)),
                         divergence_consistent=bool(np.all(deltas[-3:] > 0.03)))


def test_accommodation_full_ball_matches_manual_scan(params34):
    dom = build_domain("full-ball-complement", h=0.05, dim=2, radius=0.5)
    constants = ReductionConstants(c_p=1.25)
    prof = synthetic_profile(0.2, [1.0] * 8)
    acc = accommodate_degeneracy(dom, phase_zero(), params34, (0.0, 0.0),
                                 t0=0.5, eps_exp=0.5, mu0=2.0,
                                 constants=constants, profile=prof)
    # manual scan: largest dyadic rho with eta0 < min(t0, R0^2) and
    # mu0 * 1 > 2 C_p rho
    expected = None
    for rho in prof.radii:
        eta0 = 3.0 * 1.0 ** (2 - 3.0) * rho ** (3.0 - 0.5)
        if eta0 < min(0.5, phase_zero().r0 ** 2) and 2.0 > 2 * 1.25 * rho:
            expected = rho
            break
    assert acc.rho0 == pytest.approx(expected)
    assert acc.mode == "p"
    assert acc.q0.eta_minus <= 0.5


def test_accommodation_zero_profile_fails(params34):
    dom = build_domain("full-ball-complement", h=0.05, dim=2, radius=0.5)
    prof = synthetic_profile(0.2, [0.0] * 8)
    with pytest.raises(AccommodationFailure) as err:
        accommodate_degeneracy(dom, phase_zero(), params34, (0.0, 0.0),
                               t0=0.5, eps_exp=0.5, mu0=2.0,
                               constants=ReductionConstants(), profile=prof)
    assert err.value.kind == "no-admissible-rho0"


def test_accommodation_eps_sweep_monotone(params34):
    dom = build_domain("full-ball-complement", h=0.05, dim=2, radius=0.5)
    constants = ReductionConstants(c_p=1.25)
    prof = synthetic_profile(0.45, [1.0] * 9)
    rhos = []
    for eps in (0.1, 0.5):
        acc = accommodate_degeneracy(dom, phase_zero(), params34, (0.0, 0.0),
                                     t0=0.02, eps_exp=eps, mu0=2.0,
                                     constants=constants, profile=prof)
        rhos.append(acc.rho0)
    # larger eps tightens the time bound: rho0 cannot grow
    assert rhos[1] <= rhos[0]


# ------------------------------------------------------ decay verification

def test_verify_decay_constant_run_trivially_passes(params34):
    def comp(pts):
        return pts[:, 0] <= 0.0

    dom = build_domain("flat-halfspace", h=0.025, dim=2,
                       extent=((-0.8, 0.8), (-0.8, 0.8)))
    field = solve(dom, phase_zero(), params34, datum_constant(0.4),
                  t_final=0.05, max_snapshots=200)
    prof = synthetic_profile(0.3, [0.8] * 7)
    acc = Accommodation(mode="p", rho0=0.3, eta0_tilde=0.01,
                        q0=backward_cylinder((0.0, 0.0), 0.05, 0.3, 0.01),
                        delta_at_rho0=0.8, profile=prof, mu0=1.0)
    trace, fit = verify_decay(field, acc, params34, ReductionConstants(), 0.5)
    assert np.all(trace.osc == 0.0)
    assert fit.verdict == "pass"
    assert fit.slope == 0.0


def test_verify_decay_insufficient_scale(params34):
    dom = build_domain("flat-halfspace", h=0.05, dim=2,
                       extent=((-0.8, 0.8), (-0.8, 0.8)))
    field = solve(dom, phase_zero(), params34, datum_constant(0.4),
                  t_final=0.05, max_snapshots=50)
    prof = synthetic_profile(0.2, [0.8] * 6)
    acc = Accommodation(mode="p", rho0=0.2, eta0_tilde=0.01,
                        q0=backward_cylinder((0.0, 0.0), 0.05, 0.2, 0.01),
                        delta_at_rho0=0.8, profile=prof, mu0=1.0)
    with pytest.raises(InsufficientScale):
        verify_decay(field, acc, params34, ReductionConstants(), 0.5,
                     min_levels=6)


def test_verify_decay_positive_slope_on_halfspace(params34):
    """Small but genuine pipeline: boundary datum zero near the anchor."""
    dom = build_domain("flat-halfspace", h=0.0125, dim=2,
                       extent=((-0.4, 0.4), (-0.4, 0.4)))
    import scipy.spatial
    exterior = dom.coords()[~dom.inside].reshape(-1, 2)
    tree = scipy.spatial.cKDTree(exterior)

    def fn(pts, t):
        d, _ = tree.query(pts)
        d[dom.complement_fn(pts)] = 0.0
        return 1.8 * np.minimum(d, 0.5)

    field = solve(dom, phase_zero(), params34,
                  datum_from_function(fn, name="dist"), t_final=0.05,
                  max_snapshots=400)
    prof = wiener_sum(dom, (0.0, 0.0), 0.15, 4, params34.p, min_radius=dom.h)
    acc = accommodate_degeneracy(dom, phase_zero(), params34, (0.0, 0.0),
                                 t0=0.05, eps_exp=0.5, mu0=1.0,
                                 constants=ReductionConstants(c_p=1.25),
                                 profile=prof)
    trace, fit = verify_decay(field, acc, params34,
                              ReductionConstants(c_p=1.25), 0.5)
    assert fit.verdict == "pass"
    assert fit.slope > 0
    assert np.all(np.diff(trace.osc) <= 1e-12)
    assert fit.n_levels >= 4
