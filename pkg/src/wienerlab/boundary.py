"""The geometric setting near a lateral boundary point: intrinsic time
lengths, capacity estimates, the alternative that reduces the oscillation,
the radii-extraction iteration, and the decay verifier for the main
oscillation estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .capacity import WienerProfile, classify_phase_mode, wiener_sum
from .errors import AccommodationFailure, InsufficientScale
from .estimates import _report
from .geometry import Cylinder, backward_cylinder, BOUNDARY
from .phase import ReductionConstants, maximal_radius


class EtaStar(NamedTuple):
    value: float
    within_parabolic: bool      # eta <= r^2, the Remark-4.1 side condition


@dataclass(frozen=True)
class GeometricSetting:
    """Mode, constants and scales of one boundary-point configuration."""

    mode: str                   # "p" or "q"
    gamma_star: float
    mu: float
    r: float
    eta: float
    r0: float                   # Hoelder radius of the phase
    q_exponent: float = 4.0
    r_maximal: float = math.inf  # maximal radius (q-mode)
    a_at_point: float = 0.0

    def __post_init__(self):
        if self.mode not in ("p", "q"):
            raise ValueError("mode must be 'p' or 'q'")
        if min(self.gamma_star, self.mu, self.r, self.eta, self.r0) <= 0:
            raise ValueError("setting scales must be positive")
        if self.eta > self.r ** 2 * (1 + 1e-12):
            raise ValueError("intrinsic time length must satisfy eta <= r^2")
        if self.mode == "q":
            if self.a_at_point <= 0:
                raise ValueError("q-mode needs a positive phase value")
            if self.r > min(self.r_maximal, self.r0) / 24.0 * (1 + 1e-12):
                raise ValueError("q-mode requires r <= min(R, R0)/24")


def eta_star(mode, params, gamma_star, mu, delta_val, r, a_at_point=0.0):
    """Intrinsic time length of the boundary geometry.

    p-mode: gamma* r^p / (mu delta_p)^{p-2};
    q-mode: gamma* r^q / (a(x0,t0) (mu delta_q)^{q-2}).
    The flag reports eta <= r^2, equivalently mu delta >= gamma*^{1/(s-2)} r.
    """
    if mu <= 0 or delta_val <= 0 or r <= 0:
        raise ValueError("mu, delta and r must be positive")
    if mode == "p":
        value = gamma_star * r ** params.p / (mu * delta_val) ** (params.p - 2.0)
    elif mode == "q":
        if a_at_point <= 0:
            raise ValueError("q-mode time length needs a positive phase value")
        value = (gamma_star * r ** params.q
                 / (a_at_point * (mu * delta_val) ** (params.q - 2.0)))
    else:
        raise ValueError("mode must be 'p' or 'q'")
    return EtaStar(value=value, within_parabolic=value <= r * r)


def check_capacity_estimate(setting: GeometricSetting, delta_val, i_val):
    """Capacity bounded by the sup-average: mu delta against the stripped
    right-hand side (the q-mode picks up the (r/R)^{q-1} correction)."""
    if i_val < 0:
        raise ValueError("sup-average must be nonnegative")
    r = setting.r
    if setting.mode == "p":
        if r >= setting.r0 / 2.0:
            raise ValueError("p-mode capacity estimate needs r < R0/2")
        rhs = i_val
        qexp = None
    else:
        if r >= min(setting.r0, setting.r_maximal / 24.0):
            raise ValueError("q-mode capacity estimate needs r < min(R0, R/24)")
        mu_delta = setting.mu * delta_val
        qexp = ((r / setting.r_maximal) ** (setting.q_exponent - 1.0)
                / max(mu_delta, 1e-300) ** (setting.q_exponent - 2.0))
        rhs = i_val + qexp
    return _report(f"capacity-estimate-{setting.mode}", setting.mu * delta_val,
                   rhs, r=r, i_val=i_val, correction=qexp)


def make_setting(mode, params, constants: ReductionConstants, mu, r, delta_val,
                 phase_r0, a_at_point=0.0, r_maximal=math.inf):
    """Build a GeometricSetting with the mode's intrinsic time length."""
    es = eta_star(mode, params, constants.gamma_star, mu, delta_val, r,
                  a_at_point)
    return GeometricSetting(mode=mode, gamma_star=constants.gamma_star, mu=mu,
                            r=r, eta=min(es.value, r * r), r0=phase_r0,
                            q_exponent=params.q, r_maximal=r_maximal,
                            a_at_point=a_at_point)


def oscillation_alternative(setting: GeometricSetting, delta_val, c_mode):
    """Either the radius already controls mu delta (small-radius branch) or
    the supremum of the truncation drops: returns the branch and, in the
    reduction branch, the reduced mu' = mu (1 - delta/(2C))."""
    if c_mode <= 0:
        raise ValueError("the empirical constant must be positive")
    mu_delta = setting.mu * delta_val
    if setting.mode == "p":
        threshold = 2.0 * c_mode * setting.r
    else:
        threshold = (4.0 * c_mode * setting.r
                     + (4.0 * c_mode) ** (1.0 / (setting.q_exponent - 1.0))
                     * (setting.r / setting.r_maximal))
    if mu_delta <= threshold:
        return "small-radius", None
    return "reduction", setting.mu * (1.0 - delta_val / (2.0 * c_mode))


# --------------------------------------------------------------------------
# Radii extraction
# --------------------------------------------------------------------------

@dataclass
class RadiiSequence:
    """Decreasing radii with geometric levels, intrinsic lengths and the
    dyadic-sum bookkeeping of the extraction argument."""

    rho: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    deltas: np.ndarray
    indices: np.ndarray          # i_j: rho_j = sigma^{i_j} rho_0
    sigma: float
    c_bar: float
    c1: float
    gamma_tilde: float
    mode_exponent: float
    dyadic_delta: np.ndarray     # delta at sigma^i rho_0, i = 0..i_last
    gamma3: float = 3.0
    gamma4_measured: float = math.nan
    truncated: bool = False

    def property_1(self):
        return bool(np.all(self.mu * self.deltas >= self.c_bar * self.rho
                           - 1e-12 * self.c_bar * self.rho))

    def property_2(self):
        return bool(np.all(2.0 * self.eta[1:] <= self.eta[:-1] * (1 + 1e-12)))

    def property_3(self):
        """3 * partial sums dominate the full dyadic-sigma sums."""
        for l in range(1, len(self.rho)):
            lhs = self.gamma3 * float(self.deltas[: l + 1].sum())
            rhs = float(self.dyadic_delta[: self.indices[l] + 1].sum())
            if lhs < rhs - 1e-12:
                return False
        return True


def extract_radii(delta_fn: Callable[[float], float], rho0, mu0, c1, c_bar,
                  gamma_tilde, mode_exponent, steps=30, min_rho=0.0,
                  max_index_scan=400):
    """Extract the decreasing radius sequence driving the iteration.

    At each stage the next index is the smallest i > i_n with
    delta(sigma^i rho0) >= 2^{-(i - i_n)} delta(sigma^{i_n} rho0); levels
    shrink by the fixed factor 1 - 1/(2 C1).  Stops after ``steps`` stages,
    or earlier with the ``truncated`` flag when no admissible index exists
    above ``min_rho`` (the grid-resolution floor).
    """
    if c1 <= 1.0:
        raise ValueError("C1 must exceed 1")
    if c_bar <= 0 or gamma_tilde <= 0:
        raise ValueError("C-bar and gamma-tilde must be positive")
    if mode_exponent <= 2.0:
        raise ValueError("mode exponent must exceed 2")
    sigma = (1.0 - 1.0 / (2.0 * c1)) / 2.0
    shrink = 1.0 - 1.0 / (2.0 * c1)
    d0 = float(delta_fn(rho0))
    if mu0 * d0 < c_bar * rho0:
        raise ValueError(
            f"property (1) fails at rho0: mu0 delta(rho0) = {mu0 * d0:.6g} "
            f"< C-bar rho0 = {c_bar * rho0:.6g}")
    rho = [rho0]
    mu = [mu0]
    deltas = [d0]
    indices = [0]
    dyadic = [d0]
    truncated = False
    for _ in range(steps):
        i_cur = indices[-1]
        d_cur = deltas[-1]
        found = None
        for i in range(i_cur + 1, i_cur + max_index_scan):
            r_i = sigma ** i * rho0
            if r_i < min_rho:
                truncated = True
                break
            d_i = float(delta_fn(r_i))
            if len(dyadic) <= i:
                dyadic.append(d_i)
            if d_i >= 2.0 ** (-(i - i_cur)) * d_cur:
                found = (i, d_i)
                break
        if found is None:
            truncated = True
            break
        i_new, d_new = found
        rho.append(sigma ** i_new * rho0)
        mu.append(mu[-1] * shrink)
        deltas.append(d_new)
        indices.append(i_new)
    rho = np.array(rho)
    mu = np.array(mu)
    deltas = np.array(deltas)
    eta = gamma_tilde * rho ** mode_exponent * (mu * deltas) ** (2.0 - mode_exponent)
    seq = RadiiSequence(rho=rho, mu=mu, eta=eta, deltas=deltas,
                        indices=np.array(indices), sigma=sigma, c_bar=c_bar,
                        c1=c1, gamma_tilde=gamma_tilde,
                        mode_exponent=mode_exponent,
                        dyadic_delta=np.array(dyadic), truncated=truncated)
    if not seq.property_1():
        raise AssertionError("radii extraction violated property (1)")
    if not seq.property_2():
        raise AssertionError("radii extraction violated property (2)")
    if not seq.property_3():
        raise AssertionError("radii extraction violated property (3)")
    if len(rho) > 1:
        xs = np.log(np.array([sigma ** i * rho0
                              for i in range(len(seq.dyadic_delta))]))[::-1]
        ys = seq.dyadic_delta[::-1]
        integral = float(np.trapezoid(ys, xs))
        total = float(deltas.sum())
        seq.gamma4_measured = integral / total if total > 0 else math.inf
    return seq


# --------------------------------------------------------------------------
# Accommodation of the degeneracy and the decay verifier
# --------------------------------------------------------------------------

@dataclass
class Accommodation:
    mode: str
    rho0: float
    eta0_tilde: float
    q0: Cylinder
    delta_at_rho0: float
    profile: WienerProfile
    mu0: float
    r_maximal: float = math.inf


def accommodate_degeneracy(domain, phase, params, x0, t0, eps_exp, mu0,
                           constants: ReductionConstants, profile=None,
                           levels=10, nodes_per_radius=16, r_floor=None,
                           datum=None):
    """Choose the starting radius and cylinder of the oscillation iteration.

    Scans dyadic radii from the largest admissible one downward and keeps the
    first rho0 whose intrinsic length tilde-eta0 = 3 gamma* delta^{2-s}
    s-power fits below min(t0, R0^2) while mu0 delta(rho0) clears the
    mode threshold.  Failures carry a kind: "no-admissible-rho0" when the
    capacity profile is identically zero, "resolution-limited" otherwise.
    """
    if not 0 < eps_exp < 1:
        raise ValueError("the slack exponent must lie in (0, 1)")
    if mu0 <= 0:
        raise ValueError("mu0 must be positive")
    mode = classify_phase_mode(phase, x0, t0)
    if mode == "p":
        s = params.p
        r_cap = phase.r0
        r_max_q = math.inf
    else:
        s = params.q
        r_max_q = maximal_radius(phase, params, x0, t0, check_control=False)
        r_cap = min(phase.r0, r_max_q) / 24.0
    half_extent = min(min(x0[ax] - lo, hi - x0[ax])
                      for ax, (lo, hi) in enumerate(domain.extent))
    r_top = min(r_cap * (1 - 1e-9), half_extent / 2.0 * (1 - 1e-9))
    if r_floor is None:
        r_floor = 2.0 * domain.h
    if profile is None:
        profile = wiener_sum(domain, x0, r_top, levels, s,
                             nodes_per_radius=nodes_per_radius,
                             min_radius=r_floor)
    gamma_star = constants.gamma_star
    time_cap = min(t0, phase.r0 ** 2)
    best = None
    any_delta = 0.0
    for j, rho in enumerate(profile.radii):
        if rho > r_cap:
            continue
        d = float(profile.deltas[j])
        any_delta = max(any_delta, d)
        if d <= 0.0:
            continue
        eta0 = 3.0 * gamma_star * d ** (2.0 - s) * rho ** (s - eps_exp)
        if eta0 >= time_cap:
            continue
        if mode == "p":
            threshold = 2.0 * constants.c_p * rho
        else:
            threshold = (4.0 * constants.c_q * rho
                         + (4.0 * constants.c_q) ** (1.0 / (params.q - 1.0))
                         * rho / r_max_q)
        if mu0 * d > threshold:
            best = (float(rho), eta0, d)
            break
    if best is None:
        kind = ("no-admissible-rho0" if any_delta == 0.0
                else "resolution-limited")
        raise AccommodationFailure(
            f"no admissible rho0 under {r_top:.4g} (mode {mode})", kind=kind)
    rho0, eta0, d0 = best
    q0 = backward_cylinder(tuple(x0), t0, rho0,
                           min(mu0 ** (2.0 - s) * eta0, t0 * (1 - 1e-12)))
    return Accommodation(mode=mode, rho0=rho0, eta0_tilde=eta0, q0=q0,
                         delta_at_rho0=d0, profile=profile, mu0=mu0,
                         r_maximal=r_max_q)


@dataclass
class OscillationTrace:
    rho: np.ndarray
    osc: np.ndarray
    wiener_integral: np.ndarray
    datum_osc: float
    rhs_reference: np.ndarray    # omega0 exp(-I) + datum osc + slack, constants 1
    omega0: float


@dataclass
class DecayFit:
    slope: float                 # 1/gamma_emp
    gamma_emp: float
    gamma_hat_emp: float
    offset: float
    holder_exponent: float
    verdict: str                 # "pass" | "fail" | "criterion-inconclusive"
    n_levels: int
    divergence_consistent: bool


def verify_decay(u_field, accommodation: Accommodation, params,
                 constants: ReductionConstants, eps_exp, min_levels=4,
                 rho_floor_factor=1.5):
    """Measure the oscillation over intrinsic cylinders and fit the decay law.

    The envelope is the boundary estimate with the existential constants
    replaced by their fitted values: osc <= omega0 exp(-slope * I(rho)) +
    datum osc + offset.  A weak fit counts as a failure only when the Wiener
    profile is divergence-consistent; otherwise the verdict is
    "criterion-inconclusive" (the criterion is sufficient, not necessary).
    """
    acc = accommodation
    dom = u_field.domain
    mode_exp = params.p if acc.mode == "p" else params.q
    x0 = acc.q0.center
    t0 = acc.q0.t_center
    inside = dom.inside
    omega0 = float(u_field.values[:, inside].max()
                   - u_field.values[:, inside].min())
    lateral = (dom.labels == BOUNDARY) & u_field.ball_mask(x0, acc.rho0)
    t_lo_q0 = t0 - acc.q0.eta_minus
    slabs_q0 = u_field.slab_indices(t_lo_q0, t0)
    if lateral.any() and len(slabs_q0):
        pts = dom.coords()[lateral]
        vals = np.concatenate([u_field.datum(pts, float(u_field.times[j]))
                               for j in slabs_q0])
        datum_osc = float(vals.max() - vals.min())
    else:
        datum_osc = 0.0
    rho_list, osc_list, wi_list = [], [], []
    rho = acc.rho0
    floor_r = rho_floor_factor * dom.h
    while rho >= floor_r * 0.999:
        if omega0 > 0.0:
            eta = constants.gamma_star * rho ** mode_exp * omega0 ** (2.0 - mode_exp)
        else:
            eta = math.inf              # constant field: any window works
        eta = min(eta, t0 * (1 - 1e-12))
        # intrinsic cylinders stay nested inside the starting cylinder
        assert eta <= acc.q0.eta_minus * (1 + 1e-9) or eta >= t0 * (1 - 1e-9)
        ball = u_field.ball_mask(x0, rho) & inside
        slabs = u_field.slab_indices(t0 - eta, t0)
        if ball.any() and len(slabs):
            vals = u_field.values[slabs][:, ball]
            rho_list.append(rho)
            osc_list.append(float(vals.max() - vals.min()))
            wi_list.append(acc.profile.integral(rho, acc.rho0))
        rho *= 0.5
    if len(rho_list) < min_levels:
        raise InsufficientScale(
            f"only {len(rho_list)} dyadic levels at this resolution "
            f"(need {min_levels})")
    rho_arr = np.array(rho_list)
    osc_arr = np.array(osc_list)
    wi_arr = np.array(wi_list)
    slack = acc.rho0 ** (eps_exp / (mode_exp - 2.0))
    trace = OscillationTrace(rho=rho_arr, osc=osc_arr, wiener_integral=wi_arr,
                             datum_osc=datum_osc,
                             rhs_reference=omega0 * np.exp(-wi_arr)
                             + datum_osc + slack, omega0=omega0)
    floor = 1e-12 * max(omega0, 1.0)
    excess = osc_arr - datum_osc
    if float(np.max(excess, initial=0.0)) <= floor:
        # nothing left to decay: the envelope holds with slope 0
        fit = DecayFit(slope=0.0, gamma_emp=math.inf, gamma_hat_emp=0.0,
                       offset=0.0, holder_exponent=0.0, verdict="pass",
                       n_levels=len(rho_arr),
                       divergence_consistent=acc.profile.divergence_consistent)
        return trace, fit
    usable = excess > floor
    slope = 0.0
    holder = 0.0
    if int(usable.sum()) >= 2:
        if np.ptp(wi_arr[usable]) > 0:
            slope = -float(np.polyfit(wi_arr[usable],
                                      np.log(excess[usable]), 1)[0])
        if np.ptp(np.log(rho_arr[usable])) > 0:
            holder = float(np.polyfit(np.log(rho_arr[usable]),
                                      np.log(excess[usable]), 1)[0])
    offset = float(np.max(np.maximum(
        osc_arr - datum_osc - omega0 * np.exp(-slope * wi_arr), 0.0)))
    gamma_hat_emp = offset / slack if slack > 0 else math.inf
    envelope_ok = bool(np.all(
        osc_arr <= omega0 * np.exp(-slope * wi_arr) + datum_osc + offset
        + 1e-12 * omega0))
    monotone = bool(np.all(np.diff(osc_arr) <= 1e-12 * max(omega0, 1.0)))
    fit_ok = slope > 0 and envelope_ok and monotone and math.isfinite(gamma_hat_emp)
    if fit_ok:
        verdict = ("pass" if acc.profile.divergence_consistent
                   else "criterion-inconclusive")
    else:
        verdict = ("fail" if acc.profile.divergence_consistent
                   else "criterion-inconclusive")
    fit = DecayFit(slope=slope,
                   gamma_emp=1.0 / slope if slope > 0 else math.inf,
                   gamma_hat_emp=gamma_hat_emp, offset=offset,
                   holder_exponent=holder, verdict=verdict,
                   n_levels=len(rho_arr),
                   divergence_consistent=acc.profile.divergence_consistent)
    return trace, fit
