"""The phase coefficient a(x,t), its Hoelder condition, and the scalar
function algebra (phi, phi_Q and its inverse, Psi, eta_k) used by every
verifier.

All scalar inverses run monotone bisection so the degenerate (a = 0) and
non-degenerate branches share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class DoublePhaseParams:
    """Structure exponents and constants of the operator class."""

    p: float
    q: float
    c1: float = 1.0
    c2: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not 2.0 < self.p < self.q:
            raise ValueError(f"need 2 < p < q, got p={self.p}, q={self.q}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("structure constants must be positive")


@dataclass
class PhaseField:
    """Nonnegative coefficient a(x,t) with declared Hoelder data (A0, R0).

    ``fn(points, t)`` is vectorized over an (M, N) point array.  The declared
    constants are checked, not assumed: see check_condition_a.
    """

    fn: Callable = field(repr=False)
    a0: float = 1.0
    r0: float = 1.0
    name: str = "custom"
    time_dependent: bool = False

    def __post_init__(self):
        if self.a0 <= 0 or self.r0 <= 0:
            raise ValueError("phase constants A0, R0 must be positive")

    def __call__(self, x, t):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        vals = np.asarray(self.fn(pts, t), dtype=float)
        if np.any(vals < 0):
            raise ValueError("phase values must be nonnegative")
        if np.ndim(x) == 1:
            return float(vals[0])
        return vals

    def range_on(self, points, times):
        """(min, max) of a over a sampled point cloud and time list."""
        lo, hi = math.inf, -math.inf
        for t in np.atleast_1d(times):
            vals = self(points, float(t))
            lo = min(lo, float(np.min(vals)))
            hi = max(hi, float(np.max(vals)))
        return lo, hi


def phase_zero():
    return PhaseField(fn=lambda pts, t: np.zeros(len(pts)), a0=1.0, r0=24.0,
                      name="zero")


def phase_constant(c, a0=None, r0=24.0):
    if c < 0:
        raise ValueError("constant phase must be nonnegative")
    if a0 is None:
        a0 = max(c / 48.0, 1e-3)
    return PhaseField(fn=lambda pts, t: np.full(len(pts), float(c)),
                      a0=a0, r0=r0, name=f"constant({c})")


def phase_distance_power(dist_fn, params, c=1.0, r0=1.0):
    """a = c * dist(x, boundary)^(q-p); vanishes on the lateral boundary."""
    expo = params.q - params.p

    def fn(pts, t):
        return c * np.maximum(dist_fn(pts), 0.0) ** expo

    return PhaseField(fn=fn, a0=c * 2.0 ** expo, r0=r0,
                      name=f"distance-power({c})")


def phase_checkerboard_time(c, period, a0=1.0, r0=1.0):
    """Piecewise-constant in time; built to violate condition (A) at jumps."""

    def fn(pts, t):
        on = int(np.floor(t / period)) % 2 == 0
        return np.full(len(pts), float(c) if on else 0.0)

    return PhaseField(fn=fn, a0=a0, r0=r0, name=f"checkerboard({c},{period})",
                      time_dependent=True)


@dataclass(frozen=True)
class ReductionConstants:
    """Empirical constants of the oscillation machinery.

    These constants are existential (they depend only on the structural
    data); the harness estimates each as an observed supremum of inequality
    ratios and only asserts boundedness.
    """

    delta_cm: float = 0.5       # critical-mass lower-bound fraction
    nu: float = 0.5
    c_harnack: float = 1.0
    b: float = 1.0
    c_p: float = 2.0
    c_q: float = 2.0
    gamma_star: float = 1.0
    gamma_low: float = 1.0
    gamma_hat: float = 1.0
    gamma3: float = 3.0
    gamma4: float = 4.0

    def __post_init__(self):
        for name in ("delta_cm", "nu", "c_harnack", "b", "c_p", "c_q",
                     "gamma_star", "gamma_low", "gamma_hat", "gamma3",
                     "gamma4"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.delta_cm < 1:
            raise ValueError("delta_cm must lie in (0, 1)")
        if not 0 < self.nu < 1:
            raise ValueError("nu must lie in (0, 1)")


# --------------------------------------------------------------------------
# Scalar function algebra
# --------------------------------------------------------------------------

def phi(params, a_val, v):
    """Growth function v^p + a v^q."""
    if v < 0:
        raise ValueError("phi takes nonnegative arguments")
    if a_val < 0:
        raise ValueError("phase value must be nonnegative")
    return v ** params.p + a_val * v ** params.q


def phi_plus_kr(params, a_plus, k, r):
    """(k/r)^p + a_plus (k/r)^q."""
    if r <= 0:
        raise ValueError("radius must be positive")
    if k <= 0:
        raise ValueError("level must be positive")
    v = k / r
    return v ** params.p + a_plus * v ** params.q


def _bisect_increasing(g, y, rtol=1e-12):
    """Solve g(v) = y for strictly increasing g with g(0) = 0."""
    if y < 0:
        raise ValueError("target must be nonnegative")
    if y == 0.0:
        return 0.0
    hi = 1.0
    for _ in range(2000):
        if g(hi) >= y:
            break
        hi *= 2.0
    else:
        raise ValueError("bisection bracket not found")
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) >= y:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def phi_q(a_plus, p, q, v):
    """phi_Q(v) = v^(p-2) + a_plus v^(q-2)."""
    return v ** (p - 2.0) + a_plus * v ** (q - 2.0)


def phi_q_inverse(a_plus, p, q, y, rtol=1e-12):
    """Unique v >= 0 with v^(p-2) + a_plus v^(q-2) = y, by bisection."""
    return _bisect_increasing(lambda v: phi_q(a_plus, p, q, v), y, rtol)


def psi(a_plus, p, q, s):
    """Psi(s) = s^2 / (s^p + a_plus s^q), strictly decreasing for s > 0."""
    if s <= 0:
        raise ValueError("Psi takes positive arguments")
    return s * s / (s ** p + a_plus * s ** q)


def psi_inverse(a_plus, p, q, y, rtol=1e-12):
    """Solve Psi(v) = y for v > 0 by monotone bisection."""
    if y <= 0:
        raise ValueError("Psi inverse takes positive targets")
    lo = 1.0
    for _ in range(2000):
        if psi(a_plus, p, q, lo) >= y:
            break
        lo *= 0.5
    else:
        raise ValueError("bisection bracket not found (small side)")
    hi = max(1.0, lo)
    for _ in range(2000):
        if psi(a_plus, p, q, hi) <= y:
            break
        hi *= 2.0
    else:
        raise ValueError("bisection bracket not found (large side)")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if psi(a_plus, p, q, mid) >= y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eta_k(params, a_plus_2r, k, r):
    """Intrinsic waiting time k^2 / [(k/2r)^p + a_plus (k/2r)^q]."""
    if k <= 0 or r <= 0:
        raise ValueError("level and radius must be positive")
    v = k / (2.0 * r)
    return k * k / (v ** params.p + a_plus_2r * v ** params.q)


def eta_k_guard(params, a_plus_2r, k, r, r0):
    """True when the waiting time fits: eta_k <= (4r)^2 <= R0^2."""
    e = eta_k(params, a_plus_2r, k, r)
    return e <= (4.0 * r) ** 2 <= r0 ** 2


# --------------------------------------------------------------------------
# Condition (A) and the maximal radius
# --------------------------------------------------------------------------

def _cylinder_samples(center, t_center, r, n_space=9, n_time=9, dim=2):
    offs = np.linspace(-r, r, n_space)
    if dim == 1:
        pts = center[0] + offs[np.abs(offs) <= r][:, None]
    else:
        gx, gy = np.meshgrid(center[0] + offs, center[1] + offs, indexing="ij")
        keep = (gx - center[0]) ** 2 + (gy - center[1]) ** 2 <= r * r
        pts = np.stack([gx[keep], gy[keep]], axis=-1)
    times = t_center + np.linspace(-r * r, r * r, n_time)
    return pts, times


def check_condition_a(phase: PhaseField, centers, radii, q_minus_p,
                      n_space=9, n_time=9):
    """Measure osc a over Q_{r,r^2} cylinders against A0 r^(q-p).

    centers is a list of (x, t) pairs; every sampled radius must stay below
    the declared R0.  Returns (passed, per-cylinder ratio list).
    """
    ratios = []
    for (x, t) in centers:
        x = tuple(np.atleast_1d(x))
        for r in radii:
            if r >= phase.r0:
                raise ValueError(f"sample radius {r} must stay below R0={phase.r0}")
            pts, times = _cylinder_samples(x, t, r, n_space, n_time, dim=len(x))
            lo, hi = phase.range_on(pts, times)
            ratios.append(((x, t, r), (hi - lo) / r ** q_minus_p))
    passed = all(v <= phase.a0 * (1 + 1e-12) for _, v in ratios)
    return passed, ratios


def maximal_radius(phase: PhaseField, params, x0, t0, check_control=True):
    """R with R^(q-p) = a(x0,t0) / (2 A0); q-mode only.

    Also samples the phase on the backward cylinder at r = min(R, R0)/24 and
    verifies the control a+ <= 2 a-; failure means the declared (A0, R0) do
    not actually hold for this phase.
    """
    a_pt = phase(tuple(np.atleast_1d(x0)), t0)
    if a_pt <= 0.0:
        raise ValueError("maximal radius is defined only where the phase is positive")
    expo = 1.0 / (params.q - params.p)
    r_max = (a_pt / (2.0 * phase.a0)) ** expo
    if check_control:
        r = min(r_max, phase.r0) / 24.0
        pts, _ = _cylinder_samples(tuple(np.atleast_1d(x0)), t0, r,
                                   dim=len(np.atleast_1d(x0)))
        times = t0 - np.linspace(0.0, r * r, 9)
        lo, hi = phase.range_on(pts, times)
        if hi > 2.0 * lo + 1e-12:
            raise ValueError(
                f"phase control a+ <= 2a- fails at r={r:.4g}: ({lo:.4g}, {hi:.4g})")
    return r_max
