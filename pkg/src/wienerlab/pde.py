"""Explicit finite-difference solver for the Cauchy-Dirichlet double-phase
problem, plus the truncation-extension device and cylinder averages.

The flux is assembled per axis from two-point face differences, so the
update is a monotone scheme under the CFL bound: comparison and maximum
principles hold to rounding.  The resulting operator stays inside the
structure-condition class of the continuous problem (the axis-separable and
isotropic growth functions are equivalent up to dimensional constants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SolverBlowup
from .geometry import Cylinder, GridDomain, INTERIOR, BOUNDARY
from .phase import DoublePhaseParams, PhaseField

EPS_REG = 1e-6          # absolute gradient regularization of the flux


@dataclass
class BoundaryDatum:
    """Continuous datum f(x,t) on the closure of the space-time cylinder."""

    fn: Callable = field(repr=False)
    name: str = "datum"
    holder_alpha: Optional[float] = None
    holder_const: Optional[float] = None
    time_dependent: bool = False

    def __call__(self, pts, t):
        return np.asarray(self.fn(np.atleast_2d(pts), float(t)), dtype=float)


def datum_constant(c):
    return BoundaryDatum(fn=lambda pts, t: np.full(len(pts), float(c)),
                         name=f"constant({c})")


def datum_from_function(fn, name="datum", holder_alpha=None, holder_const=None,
                        time_dependent=False):
    return BoundaryDatum(fn=fn, name=name, holder_alpha=holder_alpha,
                         holder_const=holder_const,
                         time_dependent=time_dependent)


@dataclass
class SpaceTimeField:
    """Discrete solution snapshots on a fixed lattice.

    ``values[k]`` holds the field at ``times[k]``; boundary and exterior
    nodes carry the datum, so the field is defined on the whole box.
    """

    domain: GridDomain
    times: np.ndarray
    values: np.ndarray
    params: DoublePhaseParams
    phase: PhaseField
    datum: BoundaryDatum
    steps_taken: int = 0
    min_dt: float = math.inf

    @property
    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def slab_index(self, t):
        """Index of the stored time closest to t."""
        return int(np.argmin(np.abs(self.times - t)))

    def slab_indices(self, t_lo, t_hi):
        """Stored slabs with t_lo < t <= t_hi (half-open, matching cylinders)."""
        ix = np.nonzero((self.times > t_lo + 1e-14) &
                        (self.times <= t_hi + 1e-14))[0]
        return ix

    def ball_mask(self, x0, r):
        coords = self.domain.coords()
        d2 = ((coords - np.asarray(x0)) ** 2).sum(axis=-1)
        return d2 < r * r

    def export_csv(self, path, stride=1, header_lines=()):
        coords = self.domain.coords().reshape(-1, self.domain.dim)
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            cols = ",".join(f"x{i}" for i in range(self.domain.dim))
            fh.write(f"{cols},t,u\n")
            for k in range(0, len(self.times), stride):
                vals = self.values[k].ravel()
                for pt, v in zip(coords, vals):
                    xs = ",".join(f"{c:.9g}" for c in pt)
                    fh.write(f"{xs},{self.times[k]:.9g},{v:.12g}\n")


def flux(params, a_val, g):
    """Double-phase flux (m^(p-2) + a m^(q-2)) g with m = sqrt(|g|^2 + eps^2)."""
    g = np.asarray(g, dtype=float)
    m = math.sqrt(float((g * g).sum()) + EPS_REG * EPS_REG)
    return (m ** (params.p - 2.0) + a_val * m ** (params.q - 2.0)) * g


def _pow(arr, e):
    if e == 1.0:
        return arr
    if e == 2.0:
        return arr * arr
    return arr ** e


def solve(domain, phase, params, datum, t_final, cfl=0.4, dt_policy="adaptive",
          dt_max=None, max_snapshots=1200, periodic=False,
          _force_full_flux=False):
    """March the explicit conservative scheme to time t_final.

    Interior nodes update by the discrete divergence of the face flux;
    boundary and exterior nodes carry the datum.  dt adapts each step so
    dt * max diffusivity <= cfl h^2 / (2N); pass a float as ``dt_policy`` to
    force a fixed step (rejected if it ever violates the bound).  With
    ``periodic`` the box wraps around, every node evolves, and the datum only
    sets the initial values (conservation testbed).
    """
    if t_final <= 0:
        raise ValueError("final time must be positive")
    if not 0 < cfl < 1:
        raise ValueError("cfl must lie in (0, 1)")
    h = domain.h
    dim = domain.dim
    two_n = 2.0 * dim
    coords = domain.coords().reshape(-1, dim)
    shape = domain.shape
    evolve = np.ones(shape, dtype=bool) if periodic else (domain.labels == INTERIOR)
    u = datum(coords, 0.0).reshape(shape).copy()
    prescribed0 = u.copy()
    a_nodes = phase(coords, 0.0).reshape(shape)
    phase_active = bool(np.any(a_nodes != 0.0)) or _force_full_flux
    if dt_max is None:
        dt_max = min(h, t_final / 16.0)
    p2, q2 = params.p - 2.0, params.q - 2.0
    eps2 = EPS_REG * EPS_REG
    store_all = max_snapshots is None
    targets = None if store_all else np.linspace(0.0, t_final, int(max_snapshots))
    next_target = 1
    times = [0.0]
    snaps = [u.copy()]
    t = 0.0
    step = 0
    min_dt = math.inf
    while t < t_final - 1e-14 * t_final:
        step += 1
        if phase.time_dependent:
            a_nodes = phase(coords, t).reshape(shape)
            phase_active = bool(np.any(a_nodes != 0.0)) or _force_full_flux
        div = np.zeros(shape)
        max_diff = 0.0
        for ax in range(dim):
            if periodic:
                d = (np.roll(u, -1, axis=ax) - u) / h
            else:
                d = np.diff(u, axis=ax) / h
            m = np.sqrt(d * d + eps2)
            kp = _pow(m, p2)
            if phase_active:
                if periodic:
                    a_face = 0.5 * (a_nodes + np.roll(a_nodes, -1, axis=ax))
                else:
                    sl_lo = [slice(None)] * dim
                    sl_hi = [slice(None)] * dim
                    sl_lo[ax] = slice(None, -1)
                    sl_hi[ax] = slice(1, None)
                    a_face = 0.5 * (a_nodes[tuple(sl_lo)] + a_nodes[tuple(sl_hi)])
                kq = _pow(m, q2)
                cond = kp + a_face * kq
                diff = (params.p - 1.0) * kp + a_face * (params.q - 1.0) * kq
            else:
                cond = kp
                diff = (params.p - 1.0) * kp
            f_face = cond * d
            max_diff = max(max_diff, float(diff.max()))
            if periodic:
                div += (f_face - np.roll(f_face, 1, axis=ax)) / h
            else:
                sl = [slice(None)] * dim
                sl[ax] = slice(1, -1)
                lo = [slice(None)] * dim
                lo[ax] = slice(None, -1)
                hi = [slice(None)] * dim
                hi[ax] = slice(1, None)
                div[tuple(sl)] += (f_face[tuple(hi)] - f_face[tuple(lo)]) / h
        dt_stable = cfl * h * h / (two_n * max(max_diff, 1e-300))
        if dt_policy == "adaptive":
            if min(dt_stable, dt_max) < 1e-12 * t_final:
                raise SolverBlowup("dt underflow", step=step, t=t,
                                   dt=min(dt_stable, dt_max))
            dt = min(dt_stable, dt_max, t_final - t)
        else:
            dt = min(float(dt_policy), t_final - t)
            if dt > dt_stable * (1 + 1e-9):
                raise ValueError(
                    f"fixed dt {dt:.3g} violates the CFL bound {dt_stable:.3g} "
                    f"at step {step}")
        t_new = t + dt
        u = np.where(evolve, u + dt * div, u)
        if not periodic:
            if datum.time_dependent:
                u[~evolve] = datum(coords, t_new).reshape(shape)[~evolve]
            else:
                u[~evolve] = prescribed0[~evolve]
        if not np.isfinite(u).all():
            raise SolverBlowup("nonfinite value", step=step, t=t_new, dt=dt)
        min_dt = min(min_dt, dt)
        t = t_new
        if store_all or t >= t_final - 1e-14 or (
                next_target < len(targets) and t >= targets[next_target]):
            times.append(t)
            snaps.append(u.copy())
            if not store_all:
                while next_target < len(targets) and t >= targets[next_target]:
                    next_target += 1
    return SpaceTimeField(domain=domain, times=np.array(times),
                          values=np.stack(snaps), params=params, phase=phase,
                          datum=datum, steps_taken=step, min_dt=min_dt)


# --------------------------------------------------------------------------
# Truncation-extension and cylinder averages
# --------------------------------------------------------------------------

@dataclass
class TruncatedField:
    """Zero-extended truncation u_k and its supersolution surrogate w.

    u_k = (u - k)_+- inside Omega, 0 at complement nodes; w = mu - u_k is a
    nonnegative supersolution surrogate.  Slabs are the stored times inside
    the cylinder's interval.
    """

    domain: GridDomain
    times: np.ndarray
    u_k: np.ndarray
    w: np.ndarray
    mu: float
    level: float
    sign: str
    cylinder: Cylinder
    params: DoublePhaseParams = None
    phase: PhaseField = None

    @property
    def values(self):
        return self.w

    def slab_indices(self, t_lo, t_hi):
        return np.nonzero((self.times > t_lo + 1e-14) &
                          (self.times <= t_hi + 1e-14))[0]

    def ball_mask(self, x0, r):
        coords = self.domain.coords()
        d2 = ((coords - np.asarray(x0)) ** 2).sum(axis=-1)
        return d2 < r * r


def truncation_extension(field: SpaceTimeField, k, sign, cyl: Cylinder, mu=None):
    """Build u_k^+- on a backward cylinder with zero extension outside Omega.

    sign "+" requires k >= sup of the datum on the lateral boundary portion
    of the cylinder, sign "-" requires k <= inf; violating levels are
    rejected.  Returns the truncation together with w = mu - u_k for
    mu >= sup u_k (default: the supremum itself).
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    t_lo, t_hi = cyl.time_interval()
    slabs = field.slab_indices(t_lo, t_hi)
    if len(slabs) == 0:
        raise ValueError("cylinder contains no stored time slabs")
    dom = field.domain
    lateral = (dom.labels == BOUNDARY) & field.ball_mask(cyl.center, cyl.radius)
    if lateral.any():
        coords = dom.coords()[lateral]
        datum_vals = [field.datum(coords, float(field.times[j])) for j in slabs]
        datum_vals = np.stack(datum_vals)
        if sign == "+" and k < datum_vals.max() - 1e-12:
            raise ValueError(
                f"level {k} below sup of the datum {datum_vals.max():.6g} "
                "on the lateral boundary portion")
        if sign == "-" and k > datum_vals.min() + 1e-12:
            raise ValueError(
                f"level {k} above inf of the datum {datum_vals.min():.6g} "
                "on the lateral boundary portion")
    u_k = np.empty((len(slabs),) + dom.shape)
    for out_ix, j in enumerate(slabs):
        u = field.values[j]
        trunc = np.maximum(u - k, 0.0) if sign == "+" else np.maximum(k - u, 0.0)
        u_k[out_ix] = np.where(dom.inside, trunc, 0.0)
    sup_uk = float(u_k.max())
    if mu is None:
        mu = sup_uk
    if mu < sup_uk - 1e-12:
        raise ValueError(f"mu={mu} below sup u_k = {sup_uk:.6g}")
    w = mu - u_k
    return TruncatedField(domain=dom, times=field.times[slabs], u_k=u_k, w=w,
                          mu=mu, level=k, sign=sign, cylinder=cyl,
                          params=field.params, phase=field.phase)


def sup_average_i(w_field, x0, r, eta, t0):
    """sup over t in [t0 - eta, t0 - eta/4] of the mean of w over B_2r(x0)."""
    mask = w_field.ball_mask(x0, 2.0 * r)
    if not mask.any():
        raise ValueError("ball B_2r captures no nodes")
    times = w_field.times
    sel = np.nonzero((times >= t0 - eta - 1e-14) &
                     (times <= t0 - eta / 4.0 + 1e-14))[0]
    if len(sel) == 0:
        raise ValueError("window [t0-eta, t0-eta/4] contains no stored slabs")
    best = -math.inf
    for j in sel:
        best = max(best, float(w_field.values[j][mask].mean()))
    return best
