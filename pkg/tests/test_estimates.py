import copy
import math

import numpy as np
import pytest

from wienerlab.errors import HypothesisNotMet
from wienerlab.estimates import (CutoffSpec, check_critical_mass,
                                 check_energy_estimate,
                                 check_negative_power_energy,
                                 check_psi_decay, check_reverse_holder,
                                 check_weak_harnack)
from wienerlab.geometry import backward_cylinder, forward_cylinder
from wienerlab.pde import SpaceTimeField, datum_constant, truncation_extension
from wienerlab.phase import phase_constant, phase_zero


def make_field(domain, params, phase, values_fn, times):
    """Manual snapshot stack: values_fn(t) -> array over the grid."""
    vals = np.stack([values_fn(float(t)) for t in times])
    return SpaceTimeField(domain=domain, times=np.asarray(times, float),
                          values=vals, params=params, phase=phase,
                          datum=datum_constant(0.0))


@pytest.fixture()
def const_field(interval1d, params34):
    times = np.linspace(0.0, 0.02, 4001)
    return make_field(interval1d, params34, phase_constant(0.5, a0=0.1, r0=2.0),
                      lambda t: np.full(interval1d.shape, 0.6), times)


@pytest.fixture()
def zero_field(interval1d, params34):
    times = np.linspace(0.0, 0.02, 41)
    return make_field(interval1d, params34, phase_constant(0.5, a0=0.1, r0=2.0),
                      lambda t: np.zeros(interval1d.shape), times)


def fwd_cut(sigma=0.5, center=(0.5,), t_bar=0.004, r=0.2, eta=0.012):
    return CutoffSpec(sigma=sigma, cylinder=forward_cylinder(center, t_bar, r, eta))


# ----------------------------------------------------------------- energy

def test_energy_constant_above_level_passes_with_zero_ratio(const_field):
    rep = check_energy_estimate(const_field, fwd_cut(), k=0.3, variant="2.1")
    assert rep.passed and rep.ratio == 0.0 and rep.lhs == 0.0


def test_energy_zero_field_matches_direct_summation(zero_field, params34):
    cut = fwd_cut()
    rep = check_energy_estimate(zero_field, cut, k=1.0, variant="2.1")
    dom = zero_field.domain
    # direct evaluation: (u-k)_- == k, gradients vanish except through zeta
    coords = dom.coords()
    d = np.abs(coords[..., 0] - 0.5)
    z1 = np.clip((0.2 - d) / (0.5 * 0.2), 0, 1) ** params34.q
    ball = d < 0.2
    h = dom.h
    slabs = zero_field.slab_indices(0.004, 0.016)
    times = zero_field.times[slabs]
    sup_term = max(
        h * float(np.sum((z1 * cut.zeta2(t) ** params34.q)[ball])) for t in times)
    assert rep.context["sublevel"] > 0
    assert rep.lhs > sup_term * 0.99   # gradient of the cutoff adds energy
    # both sides recomputed directly
    a_hi = 0.5
    phi_plus = (1.0 / 0.2) ** 3 + a_hi * (1.0 / 0.2) ** 4
    dtw = np.diff(np.concatenate([[0.004], times]))
    sublevel = float(sum(dtw) * h * ball.sum())
    rhs = 0.5 ** (-4.0) * phi_plus * (1 + 1.0 / (0.012 * phi_plus)) * sublevel
    assert rep.rhs == pytest.approx(rhs, rel=1e-12)


def test_energy_sigma_sweep_scaling(plateau_run, params34):
    """The sigma^-q envelope is slack by design: as sigma shrinks the
    measured ratio decreases with a log2-slope between q-p and q+1 (the
    range the estimate's own proof allows)."""
    t_end = float(plateau_run.times[-1])
    w = truncation_extension(
        plateau_run, k=0.4, sign="+",
        cyl=backward_cylinder((0.5,), t_end, 0.25, 0.9 * t_end))
    ratios = []
    for sigma in (0.5, 0.25, 0.125):
        cut = CutoffSpec(sigma=sigma, cylinder=forward_cylinder(
            (0.5,), 0.1 * t_end, 0.2, 0.6 * t_end))
        rep = check_energy_estimate(w, cut, k=0.05, variant="2.1")
        assert rep.passed
        assert rep.context["sublevel"] > 0
        ratios.append(rep.ratio)
    assert ratios[0] > ratios[1] > ratios[2] > 0
    for a, b in zip(ratios, ratios[1:]):
        slope = math.log2(a / b)
        assert params34.q - params34.p <= slope <= params34.q + 1.0


def test_energy_sigma_sweep_variant_22(zero_field):
    """Variant 2.2 under the sweep: the ratio stays finite and only gains
    slack as sigma shrinks (the envelope grows like sigma^-q while the
    measured left side grows strictly slower)."""
    ratios = []
    for sigma in (0.5, 0.25, 0.125):
        cut = CutoffSpec(sigma=sigma, cylinder=forward_cylinder(
            (0.5,), 0.004, 0.2, 0.012))
        rep = check_energy_estimate(zero_field, cut, k=1.0, variant="2.2")
        assert rep.passed and math.isfinite(rep.ratio)
        ratios.append(rep.ratio)
    assert ratios[0] > ratios[1] > ratios[2] > 0


def test_energy_variant_22_initial_term(plateau_run):
    t_end = float(plateau_run.times[-1])
    w = truncation_extension(
        plateau_run, k=0.85, sign="+",
        cyl=backward_cylinder((0.5,), t_end, 0.25, 0.9 * t_end))
    cut = CutoffSpec(sigma=0.25, cylinder=forward_cylinder(
        (0.5,), 0.1 * t_end, 0.2, 0.6 * t_end))
    rep = check_energy_estimate(w, cut, k=0.4, variant="2.2")
    assert rep.passed and math.isfinite(rep.ratio)


def test_energy_rejects_cylinder_outside_grid(const_field):
    bad = CutoffSpec(sigma=0.5, cylinder=forward_cylinder((1.2,), 0.0, 0.3, 0.01))
    with pytest.raises(ValueError, match="extent"):
        check_energy_estimate(const_field, bad, k=0.1)


# ----------------------------------------------------- critical mass / Psi

def test_critical_mass_constant_solution(const_field):
    rep = check_critical_mass(const_field, (0.5,), 0.0, 0.05, k=0.6)
    assert rep.passed
    assert rep.context["delta_emp"] == pytest.approx(1.0)


def test_critical_mass_hypothesis_and_guard(const_field, interval1d, params34):
    with pytest.raises(HypothesisNotMet, match="fails"):
        check_critical_mass(const_field, (0.5,), 0.0, 0.05, k=0.7)
    # guard violation: tiny R0 with r > R0/4 and k/2r < 1
    times = np.linspace(0.0, 0.02, 41)
    small_r0 = make_field(interval1d, params34,
                          phase_constant(0.5, a0=0.1, r0=0.05),
                          lambda t: np.full(interval1d.shape, 0.6), times)
    with pytest.raises(HypothesisNotMet, match="guard"):
        check_critical_mass(small_r0, (0.5,), 0.0, 0.05, k=0.02)


def test_psi_decay_constant_field(const_field):
    rep = check_psi_decay(const_field, (0.5,), 0.0, 0.05, k=0.6, delta_emp=1.0)
    assert rep.passed
    assert min(rep.context["ratios"]) >= 1.0 - 1e-9


def test_critical_mass_and_psi_on_run(plateau_run):
    rep = check_critical_mass(plateau_run, (0.5,), 0.0, 0.05, k=0.5)
    assert rep.passed and rep.context["delta_emp"] > 0
    d = min(rep.context["delta_emp"], 1.0)
    rep2 = check_psi_decay(plateau_run, (0.5,), 0.0, 0.05, k=0.5, delta_emp=d)
    assert rep2.passed


# ------------------------------------------------------- negative powers

def test_negative_power_constant_field(const_field):
    rep = check_negative_power_energy(const_field, fwd_cut(), alpha=0.5,
                                      delta_shift=0.1)
    assert rep.passed and math.isfinite(rep.ratio)
    # u constant: the gradient of u vanishes, terms only see the cutoff
    assert rep.context["lhs_sup"] > 0
    assert rep.context["rhs_time"] > 0


def test_negative_power_alpha_near_one_allowed(const_field):
    rep = check_negative_power_energy(const_field, fwd_cut(), alpha=0.999,
                                      delta_shift=0.1)
    assert rep.context["blowup_factor"] == pytest.approx(1000.0)


def test_negative_power_rejects_zero_shift_on_zero_field(zero_field):
    with pytest.raises(ValueError, match="rejected"):
        check_negative_power_energy(zero_field, fwd_cut(), alpha=0.5,
                                    delta_shift=0.0)


def test_negative_power_shift_scaling(zero_field, params34):
    """With u = 0 each term is a pure power of the shift."""
    cut = fwd_cut()
    r1 = check_negative_power_energy(zero_field, cut, 0.5, delta_shift=0.2)
    r2 = check_negative_power_energy(zero_field, cut, 0.5, delta_shift=0.4)
    a = 0.5
    p, q = params34.p, params34.q
    assert r2.context["rhs_time"] / r1.context["rhs_time"] == \
        pytest.approx(2 ** (1 - a), rel=1e-12)
    assert r2.context["rhs_p"] / r1.context["rhs_p"] == \
        pytest.approx(2 ** (p - a - 1), rel=1e-12)
    assert r2.context["rhs_q"] / r1.context["rhs_q"] == \
        pytest.approx(2 ** (q - a - 1), rel=1e-12)
    assert r2.context["lhs_sup"] / r1.context["lhs_sup"] == \
        pytest.approx(2 ** (1 - a), rel=1e-12)


# ------------------------------------------------------- reverse Hoelder

def test_reverse_holder_constant_closed_form(zero_field, params34):
    x0, t_bar, r, eta, m, d = (0.5,), 0.004, 0.2, 0.012, 0.5, 0.3
    rep = check_reverse_holder(zero_field, x0, t_bar, r, eta, m, delta_shift=d)
    p, q, n = params34.p, params34.q, 1
    a_plus = 0.5
    exp_p = p - 2 + m * (p + n) / n
    exp_q = q - 2 + m * (p + n) / n
    # slab weights sum to the covered window length
    slabs = zero_field.slab_indices(t_bar, t_bar + eta)
    times = zero_field.times[slabs]
    span = float(times[-1] - t_bar)
    lhs = span * d ** exp_p / r ** p + a_plus * span * d ** exp_q / r ** q
    bracket = 1 + eta * (d ** (p - 2) / r ** p + a_plus * d ** (q - 2) / r ** q)
    rhs = d ** (m * (p + n) / n) * bracket
    assert rep.lhs == pytest.approx(lhs, rel=1e-12)
    assert rep.rhs == pytest.approx(rhs, rel=1e-12)


def test_reverse_holder_m_sweep_monotone(plateau_run):
    t_end = float(plateau_run.times[-1])
    ratios = []
    for m in (0.5, 0.9, 0.99):
        rep = check_reverse_holder(plateau_run, (0.5,), 0.1 * t_end, 0.45,
                                   0.5 * t_end, m, delta_shift=0.01)
        assert math.isfinite(rep.ratio)
        ratios.append(rep.ratio)
    assert ratios[0] < ratios[1] < ratios[2]


def test_reverse_holder_guards(zero_field):
    with pytest.raises(ValueError):
        check_reverse_holder(zero_field, (0.5,), 0.0, 0.2, 0.01, m=1.5)
    with pytest.raises(ValueError, match="R0"):
        check_reverse_holder(zero_field, (0.5,), 0.0, 3.0, 0.01, m=0.5)


# --------------------------------------------------------- weak Harnack

def test_weak_harnack_constant(const_field):
    rep = check_weak_harnack(const_field, (0.5,), 0.0, 0.045, 0.01)
    assert rep.passed
    assert rep.context["c_emp"] <= 1.0


def test_weak_harnack_scaling_by_two(const_field, interval1d, params34):
    times = const_field.times
    doubled = make_field(interval1d, params34, const_field.phase,
                         lambda t: np.full(interval1d.shape, 1.2), times)
    r1 = check_weak_harnack(const_field, (0.5,), 0.0, 0.045, 0.01)
    r2 = check_weak_harnack(doubled, (0.5,), 0.0, 0.045, 0.01)
    assert r2.context["c_emp"] <= 2.0 * r1.context["c_emp"] + 1e-12


def test_weak_harnack_on_spreading_bump(plateau_run):
    rep = check_weak_harnack(plateau_run, (0.5,), 0.0, 0.04, 0.01)
    assert rep.passed and math.isfinite(rep.context["c_emp"])
    assert rep.context["branch"] in ("time-length", "intrinsic")


def test_weak_harnack_rejects_negative_field(interval1d, params34):
    times = np.linspace(0.0, 0.02, 11)
    neg = make_field(interval1d, params34, phase_zero(),
                     lambda t: np.full(interval1d.shape, -1.0), times)
    with pytest.raises(HypothesisNotMet):
        check_weak_harnack(neg, (0.5,), 0.0, 0.02, 0.01)


# ------------------------------------------------- determinism, purity

def test_verifiers_deterministic_and_side_effect_free(plateau_run):
    before = plateau_run.values.copy()
    rep1 = check_reverse_holder(plateau_run, (0.5,), 0.001, 0.15, 0.01, 0.5,
                                delta_shift=0.02)
    rep2 = check_reverse_holder(plateau_run, (0.5,), 0.001, 0.15, 0.01, 0.5,
                                delta_shift=0.02)
    assert rep1.lhs == rep2.lhs and rep1.rhs == rep2.rhs
    assert np.array_equal(plateau_run.values, before)
