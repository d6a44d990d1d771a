"""Numerical verifiers for the proved inequalities.

Each verifier evaluates both sides of an estimate on a computed field and
reports the ratio with the existential constant stripped from the right-hand
side: the theory only guarantees that a data-dependent constant exists, so
the testable content is that the measured ratio stays bounded across
instances.

All discrete integrals are midpoint sums: h^N per node, the inter-slab gap
per stored time.  Verifiers never mutate their inputs and are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisNotMet
from .geometry import Cylinder
from .phase import eta_k, phi_plus_kr, phi_q, phi_q_inverse, psi_inverse

RATIO_FLOOR = 1e-300


@dataclass(frozen=True)
class CutoffSpec:
    """Piecewise-linear ramps raised to the q power.

    zeta1 = clip((r - |x - center|) / (sigma r), 0, 1) equals 1 on
    B_{r(1-sigma)} and vanishes outside B_r with |grad zeta1| = 1/(sigma r);
    zeta2 does the same on the time axis of the forward cylinder.  Both meet
    the derivative bounds gamma/(sigma r), gamma/(sigma eta) with gamma = 2.
    """

    sigma: float
    cylinder: Cylinder
    q_power: bool = True

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if self.cylinder.orientation != "forward":
            raise ValueError("cutoffs live on forward cylinders")

    def zeta1(self, domain):
        coords = domain.coords()
        d = np.sqrt(((coords - np.asarray(self.cylinder.center)) ** 2).sum(axis=-1))
        r = self.cylinder.radius
        return np.clip((r - d) / (self.sigma * r), 0.0, 1.0)

    def zeta2(self, t):
        t_bar = self.cylinder.t_center
        eta = self.cylinder.eta_plus
        return float(np.clip((t_bar + eta - t) / (self.sigma * eta), 0.0, 1.0))


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.ratio):
            raise ValueError("inequality ratio must be finite")


def _report(name, lhs, rhs, passed=None, **context):
    ratio = lhs / max(rhs, RATIO_FLOOR)
    if passed is None:
        passed = math.isfinite(ratio)
    return InequalityReport(name=name, lhs=lhs, rhs=rhs, ratio=ratio,
                            passed=passed, context=context)


def _check_ball_inside(domain, x0, r):
    for ax, (lo, hi) in enumerate(domain.extent):
        if x0[ax] - r < lo - 1e-12 or x0[ax] + r > hi + 1e-12:
            raise ValueError(f"ball of radius {r} escapes the grid extent")


def _slab_weights(times, t_start):
    prev = np.concatenate([[t_start], times[:-1]])
    return times - prev


def _grad_pow_sum(arr, h, power):
    grads = np.gradient(arr, h, edge_order=1) if arr.ndim > 1 else \
        [np.gradient(arr, h, edge_order=1)]
    g2 = sum(g * g for g in grads)
    return float(np.sum(g2 ** (power / 2.0)))


def _phase_extrema(phase, domain, mask, times):
    pts = domain.coords()[mask]
    return phase.range_on(pts, times)


# --------------------------------------------------------------------------
# Lemma-style verifiers
# --------------------------------------------------------------------------

def check_energy_estimate(w_field, cutoff: CutoffSpec, k, variant="2.1"):
    """Caccioppoli estimate on truncations: both variants.

    lhs: sup-in-time of the weighted (u-k)_-^2 mass plus the
    (r/k)^p [phi-] weighted p-gradient energy of the cutoff truncation.
    rhs (existential constant stripped): sigma^-q [phi+] (1 + k^2/(eta
    [phi+])) |A-| for the first variant; the initial-slab mass plus
    sigma^-q [phi+] |A-| for the second.
    """
    if variant not in ("2.1", "2.2"):
        raise ValueError("variant must be '2.1' or '2.2'")
    if k <= 0:
        raise ValueError("level must be positive")
    dom = w_field.domain
    cyl = cutoff.cylinder
    params = w_field.params
    x_bar, t_bar = cyl.center, cyl.t_center
    r, eta = cyl.radius, cyl.eta_plus
    _check_ball_inside(dom, x_bar, r)
    slabs = w_field.slab_indices(t_bar, t_bar + eta)
    if len(slabs) == 0:
        raise ValueError("cylinder covers no stored slabs")
    times = w_field.times[slabs]
    h_n = dom.h ** dom.dim
    ball = w_field.ball_mask(x_bar, r)
    a_lo, a_hi = _phase_extrema(w_field.phase, dom, ball, times)
    phi_minus = phi_plus_kr(params, a_lo, k, r)
    phi_plus = phi_plus_kr(params, a_hi, k, r)
    z1 = cutoff.zeta1(dom)
    z1q = z1 ** params.q
    dtw = _slab_weights(times, t_bar)
    sup_term = 0.0
    grad_term = 0.0
    sublevel = 0.0
    for j, ix in enumerate(slabs):
        u = w_field.values[ix]
        v = np.maximum(k - u, 0.0)
        if variant == "2.1":
            z2 = cutoff.zeta2(times[j]) ** params.q
            zeta = z1q * z2
        else:
            zeta = z1q
        sup_term = max(sup_term, h_n * float(np.sum((zeta * v * v)[ball])))
        grad_term += dtw[j] * h_n * _grad_pow_sum(zeta * v, dom.h, params.p)
        sublevel += dtw[j] * h_n * float(np.count_nonzero(ball & (u <= k)))
    lhs = sup_term + (r / k) ** params.p * phi_minus * grad_term
    if variant == "2.1":
        rhs = (cutoff.sigma ** (-params.q) * phi_plus
               * (1.0 + k * k / (eta * phi_plus)) * sublevel)
        initial = None
    else:
        j0 = w_field.slab_indices(t_bar - 2 * eta, t_bar)
        u0 = w_field.values[j0[-1]] if len(j0) else w_field.values[slabs[0]]
        v0 = np.maximum(k - u0, 0.0)
        initial = h_n * float(np.sum((z1q * v0 * v0)[ball]))
        rhs = initial + cutoff.sigma ** (-params.q) * phi_plus * sublevel
    if sublevel == 0.0 and (initial in (None, 0.0)):
        return _report(f"energy-{variant}", 0.0, 0.0, passed=True,
                       sigma=cutoff.sigma, k=k, note="empty sublevel set",
                       ratio_convention="0")
    return _report(f"energy-{variant}", lhs, rhs, sigma=cutoff.sigma, k=k,
                   phi_minus=phi_minus, phi_plus=phi_plus, sublevel=sublevel)


def check_critical_mass(u_field, x0, t_bar, r, k):
    """Initial-slab lower bound propagating over the intrinsic waiting time.

    Hypothesis u(., t_bar) >= k on B_r is verified on the nodes; violated
    hypotheses raise HypothesisNotMet (a precondition error, distinct from a
    failed conclusion).  Reports delta_emp = inf over Q+_{r/2, eta_k} of u/k.
    """
    dom = u_field.domain
    params = u_field.params
    _check_ball_inside(dom, x0, 4.0 * r)
    j_bar = u_field.slab_index(t_bar)
    ball_r = u_field.ball_mask(x0, r)
    u_bar = u_field.values[j_bar]
    if float(u_bar[ball_r].min()) < k - 1e-12:
        raise HypothesisNotMet(
            f"u(., t_bar) >= k fails: min {float(u_bar[ball_r].min()):.6g} < {k}")
    ball_2r = u_field.ball_mask(x0, 2.0 * r)
    times_2r = np.linspace(t_bar, t_bar + (2.0 * r) ** 2, 9)
    _, a_plus = _phase_extrema(u_field.phase, dom, ball_2r, times_2r)
    e_k = eta_k(params, a_plus, k, r)
    r0 = u_field.phase.r0
    if not (e_k <= (4.0 * r) ** 2 <= r0 ** 2):
        raise HypothesisNotMet(
            f"waiting-time guard fails: eta_k={e_k:.4g}, (4r)^2={(4*r)**2:.4g}, "
            f"R0^2={r0**2:.4g}")
    slabs = u_field.slab_indices(t_bar, t_bar + e_k)
    if len(slabs) == 0:
        raise ValueError("waiting window holds no stored slabs")
    half = u_field.ball_mask(x0, 0.5 * r)
    inf_u = min(float(u_field.values[ix][half].min()) for ix in slabs)
    delta_emp = inf_u / k
    return _report("critical-mass", inf_u, k, passed=delta_emp > 0.0,
                   delta_emp=delta_emp, eta_k=e_k, a_plus=a_plus, k=k, r=r)


def check_psi_decay(u_field, x0, t_bar, r, k, delta_emp, tol_slack=0.1,
                    n_slabs=10):
    """Long-time version of the critical-mass bound via the Psi inverse.

    Per-slab ratio of inf u over B_{r/2} to delta_emp * k * Psi^-1(1 +
    (t - t_bar)/eta_k) for t up to t_bar + (4r)^2; passes when the smallest
    ratio stays above 1 - tol_slack.
    """
    dom = u_field.domain
    params = u_field.params
    _check_ball_inside(dom, x0, 4.0 * r)
    if delta_emp <= 0:
        raise HypothesisNotMet("needs a positive delta_emp from critical mass")
    ball_2r = u_field.ball_mask(x0, 2.0 * r)
    times_2r = np.linspace(t_bar, t_bar + (2.0 * r) ** 2, 9)
    _, a_plus_2r = _phase_extrema(u_field.phase, dom, ball_2r, times_2r)
    e_k = eta_k(params, a_plus_2r, k, r)
    ball_4r = u_field.ball_mask(x0, 4.0 * r)
    times_4r = np.linspace(t_bar, t_bar + (4.0 * r) ** 2, 9)
    _, a_plus = _phase_extrema(u_field.phase, dom, ball_4r, times_4r)
    slabs = u_field.slab_indices(t_bar, t_bar + (4.0 * r) ** 2)
    if len(slabs) == 0:
        raise ValueError("decay window holds no stored slabs")
    pick = slabs[np.unique(np.linspace(0, len(slabs) - 1, n_slabs).astype(int))]
    half = u_field.ball_mask(x0, 0.5 * r)
    ratios = []
    for ix in pick:
        t = float(u_field.times[ix])
        bound = delta_emp * k * psi_inverse(a_plus, params.p, params.q,
                                            1.0 + (t - t_bar) / e_k)
        inf_u = float(u_field.values[ix][half].min())
        ratios.append(inf_u / max(bound, RATIO_FLOOR))
    worst = min(ratios)
    return _report("psi-decay", worst, 1.0 - tol_slack,
                   passed=worst >= 1.0 - tol_slack, ratios=ratios,
                   eta_k=e_k, a_plus=a_plus)


def check_negative_power_energy(w_field, cutoff: CutoffSpec, alpha,
                                delta_shift):
    """Energy estimate from testing with negative powers (fractional powers
    of u + delta on both sides); per-term values land in the context so
    scaling checks can look at each separately.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if delta_shift < 0:
        raise ValueError("delta_shift must be nonnegative")
    dom = w_field.domain
    params = w_field.params
    cyl = cutoff.cylinder
    x_bar, t_bar = cyl.center, cyl.t_center
    r, eta = cyl.radius, cyl.eta_plus
    _check_ball_inside(dom, x_bar, r)
    slabs = w_field.slab_indices(t_bar, t_bar + eta)
    if len(slabs) == 0:
        raise ValueError("cylinder covers no stored slabs")
    times = w_field.times[slabs]
    ball = w_field.ball_mask(x_bar, r)
    u_min = min(float(w_field.values[ix][ball].min()) for ix in slabs)
    if delta_shift == 0.0 and u_min <= 0.0:
        raise ValueError("delta_shift = 0 with min u = 0 is rejected")
    h_n = dom.h ** dom.dim
    coords_flat = dom.coords().reshape(-1, dom.dim)
    z1 = cutoff.zeta1(dom)
    z1q = z1 ** params.q
    dtw = _slab_weights(times, t_bar)
    a_lo, a_hi = _phase_extrema(w_field.phase, dom, ball, times)
    p_pow = (params.p - alpha - 1.0) / params.p
    q_pow = (params.q - alpha - 1.0) / params.q
    sup_term = 0.0
    grad_p = grad_q = 0.0
    int_low = int_p = int_q = 0.0
    for j, ix in enumerate(slabs):
        u = w_field.values[ix] + delta_shift
        z2 = cutoff.zeta2(times[j]) ** params.q
        zeta = z1q * z2
        sup_term = max(sup_term, h_n * float(np.sum((u ** (1.0 - alpha) * zeta)[ball])))
        grad_p += dtw[j] * h_n * _grad_pow_sum(u ** p_pow * zeta, dom.h, params.p)
        a_vals = w_field.phase(coords_flat, float(times[j])).reshape(dom.shape)
        gq = np.gradient(u ** q_pow * zeta, dom.h, edge_order=1)
        if dom.dim == 1:
            gq = [gq]
        g2 = sum(g * g for g in gq)
        grad_q += dtw[j] * h_n * float(np.sum(a_vals * g2 ** (params.q / 2.0)))
        int_low += dtw[j] * h_n * float(np.sum(u[ball] ** (1.0 - alpha)))
        int_p += dtw[j] * h_n * float(np.sum(u[ball] ** (params.p - alpha - 1.0)))
        int_q += dtw[j] * h_n * float(np.sum(u[ball] ** (params.q - alpha - 1.0)))
    dt_zeta = params.q / (cutoff.sigma * eta)
    grad_zeta = params.q / (cutoff.sigma * r)
    lhs_terms = {
        "lhs_sup": sup_term / (1.0 - alpha),
        "lhs_grad_p": alpha * grad_p,
        "lhs_grad_q": alpha * grad_q,
    }
    rhs_terms = {
        "rhs_time": dt_zeta * int_low / (1.0 - alpha),
        "rhs_p": alpha ** (1.0 - params.p) * grad_zeta ** params.p * int_p,
        "rhs_q": alpha ** (1.0 - params.q) * grad_zeta ** params.q * a_hi * int_q,
    }
    lhs = sum(lhs_terms.values())
    rhs = sum(rhs_terms.values())
    return _report("negative-power", lhs, rhs, alpha=alpha,
                   delta_shift=delta_shift, blowup_factor=1.0 / (1.0 - alpha),
                   a_plus=a_hi, a_minus=a_lo, **lhs_terms, **rhs_terms)


def check_reverse_holder(u_field, x0, t_bar, r, eta, m, delta_shift=0.0):
    """Reverse Hoelder bound: averaged high powers of u + delta against the
    matching power of the sup-average I with the degeneracy bracket F(I).
    """
    if not 0 < m < 1:
        raise ValueError("m must lie in (0, 1)")
    dom = u_field.domain
    params = u_field.params
    if r >= u_field.phase.r0:
        raise ValueError(f"radius {r} must stay below R0={u_field.phase.r0}")
    _check_ball_inside(dom, x0, r)
    slabs = u_field.slab_indices(t_bar, t_bar + eta)
    if len(slabs) == 0:
        raise ValueError("cylinder covers no stored slabs")
    times = u_field.times[slabs]
    ball_r = u_field.ball_mask(x0, r)
    half = u_field.ball_mask(x0, 0.5 * r)
    _, a_plus = _phase_extrema(u_field.phase, dom, ball_r, times)
    dtw = _slab_weights(times, t_bar)
    n_dim = dom.dim
    exp_p = params.p - 2.0 + m * (params.p + n_dim) / n_dim
    exp_q = params.q - 2.0 + m * (params.p + n_dim) / n_dim
    sup_avg = -math.inf
    int_p = int_q = 0.0
    for j, ix in enumerate(slabs):
        u = u_field.values[ix]
        sup_avg = max(sup_avg, float(u[ball_r].mean()))
        shifted = u[half] + delta_shift
        int_p += dtw[j] * float(np.mean(shifted ** exp_p))
        int_q += dtw[j] * float(np.mean(shifted ** exp_q))
    big_i = sup_avg + delta_shift
    lhs = int_p / r ** params.p + a_plus * int_q / r ** params.q
    bracket = 1.0 + eta * (big_i ** (params.p - 2.0) / r ** params.p
                           + a_plus * big_i ** (params.q - 2.0) / r ** params.q)
    rhs = big_i ** (m * (params.p + n_dim) / n_dim) * bracket
    return _report("reverse-holder", lhs, rhs, m=m, delta_shift=delta_shift,
                   big_i=big_i, a_plus=a_plus, bracket=bracket)


def check_weak_harnack(u_field, x0, t_bar, r, eta, b=1.0, n_slabs=5):
    """Initial spatial average against later infima plus radius-scale terms.

    C_emp = I_bar / (r + r phi^-1(r^2/eta) + inf over B_2r of u(., t)) for t
    in the intrinsic window; the report records which branch eta_1 took.
    """
    dom = u_field.domain
    params = u_field.params
    _check_ball_inside(dom, x0, 16.0 * r)
    slabs_16 = u_field.slab_indices(t_bar - 1e-14, u_field.times[-1])
    ball_16 = u_field.ball_mask(x0, 16.0 * r)
    for ix in slabs_16:
        if float(u_field.values[ix][ball_16].min()) < -1e-12:
            raise HypothesisNotMet("u must be nonnegative on Q+_{16r}")
    j_bar = u_field.slab_index(t_bar)
    i_bar = float(u_field.values[j_bar][u_field.ball_mask(x0, r)].mean())
    ball_12 = u_field.ball_mask(x0, 12.0 * r)
    t_hi = min(float(u_field.times[-1]), t_bar + (12.0 * r) ** 2)
    _, a_plus = _phase_extrema(u_field.phase, dom, ball_12,
                               np.linspace(t_bar, t_hi, 9))
    if i_bar <= 0.0:
        return _report("weak-harnack", 0.0, 1.0, passed=True, i_bar=i_bar,
                       note="zero initial average")
    eta_cap = b * r * r / phi_q(a_plus, params.p, params.q, i_bar / r)
    eta1 = min(eta, eta_cap)
    branch = "time-length" if eta1 == eta else "intrinsic"
    sel = u_field.slab_indices(t_bar + eta1 / 2.0 - 1e-14, t_bar + eta1)
    if len(sel) == 0:
        raise ValueError("weak Harnack window empty after discretization")
    pick = sel[np.unique(np.linspace(0, len(sel) - 1, n_slabs).astype(int))]
    ball_2r = u_field.ball_mask(x0, 2.0 * r)
    phi_inv = phi_q_inverse(a_plus, params.p, params.q, r * r / eta)
    denoms = []
    for ix in pick:
        inf_2r = float(u_field.values[ix][ball_2r].min())
        denoms.append(r + r * phi_inv + max(inf_2r, 0.0))
    c_emp = i_bar / min(denoms)
    return _report("weak-harnack", i_bar, min(denoms),
                   passed=math.isfinite(c_emp), c_emp=c_emp, branch=branch,
                   eta1=eta1, a_plus=a_plus, phi_inv_term=r * phi_inv)
